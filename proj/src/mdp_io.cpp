#include "scalefree/mdp_io.hpp"

#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "scalefree/errors.hpp"

namespace scalefree {

namespace {

std::string format_number(double v) {
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%.17g", v);
    return buffer;
}

// Line reader that skips comments and tracks line numbers for diagnostics.
class LineReader {
public:
    explicit LineReader(std::istream& in) : in_(in) {}

    std::istringstream next(const char* expected) {
        std::string line;
        while (std::getline(in_, line)) {
            ++number_;
            const auto first = line.find_first_not_of(" \t\r");
            if (first == std::string::npos || line[first] == '#') continue;
            return std::istringstream(line);
        }
        fail(std::string("unexpected end of input, expected ") + expected);
    }

    [[noreturn]] void fail(const std::string& message) const {
        throw InvalidInput("line " + std::to_string(number_) + ": " + message);
    }

    void expect_keyword(std::istringstream& line, const char* keyword) const {
        std::string word;
        if (!(line >> word) || word != keyword) fail(std::string("expected '") + keyword + "'");
    }

    std::size_t read_count(std::istringstream& line, const char* what) const {
        long long v = -1;
        if (!(line >> v) || v < 0) fail(std::string("expected a count for ") + what);
        return static_cast<std::size_t>(v);
    }

    double read_number(std::istringstream& line) const {
        std::string token;
        if (!(line >> token)) fail("expected a number");
        char* end = nullptr;
        const double v = std::strtod(token.c_str(), &end);
        if (end == token.c_str() || *end != '\0') fail("malformed number '" + token + "'");
        return v;
    }

    void expect_end_of_line(std::istringstream& line) const {
        std::string extra;
        if (line >> extra) fail("unexpected trailing token '" + extra + "'");
    }

private:
    std::istream& in_;
    std::size_t number_ = 0;
};

void expect_header(LineReader& reader, const char* magic) {
    auto line = reader.next(magic);
    reader.expect_keyword(line, magic);
    const std::size_t version = reader.read_count(line, "format version");
    if (version != 1) reader.fail("unsupported format version " + std::to_string(version));
    reader.expect_end_of_line(line);
}

}  // namespace

void write_mdp(std::ostream& out, const LayeredMdp& mdp) {
    const auto& structure = mdp.structure();
    out << "scalefree-mdp 1\n";
    out << "horizon " << structure.horizon() << "\n";
    out << "actions " << structure.actions() << "\n";
    out << "layers";
    for (std::size_t n : structure.layer_sizes()) out << ' ' << n;
    out << "\ninitial";
    for (double p : mdp.initial()) out << ' ' << format_number(p);
    out << "\n";
    for (std::size_t s = 0; s < structure.state_count(); ++s) {
        if (!structure.has_row(s)) continue;
        const std::size_t h = structure.layer_of(s);
        for (std::size_t a = 0; a < structure.actions(); ++a) {
            out << "transition " << h << ' ' << s - structure.layer_begin(h) << ' ' << a << " :";
            for (double p : mdp.transition(s, a)) out << ' ' << format_number(p);
            out << "\n";
        }
    }
    out << "end\n";
}

LayeredMdp read_mdp(std::istream& in) {
    LineReader reader(in);
    expect_header(reader, "scalefree-mdp");

    auto line = reader.next("horizon");
    reader.expect_keyword(line, "horizon");
    const std::size_t horizon = reader.read_count(line, "horizon");
    reader.expect_end_of_line(line);

    line = reader.next("actions");
    reader.expect_keyword(line, "actions");
    const std::size_t actions = reader.read_count(line, "actions");
    reader.expect_end_of_line(line);

    line = reader.next("layers");
    reader.expect_keyword(line, "layers");
    std::vector<std::size_t> sizes;
    for (std::size_t h = 0; h < horizon; ++h) sizes.push_back(reader.read_count(line, "layer size"));
    reader.expect_end_of_line(line);

    LayeredStructure structure(sizes, actions);
    TransitionKernel kernel;
    kernel.rows.assign(structure.row_storage(), 0.0);
    std::vector<bool> seen(structure.state_count() * actions, false);

    line = reader.next("initial");
    reader.expect_keyword(line, "initial");
    for (std::size_t j = 0; j < structure.layer_size(0); ++j) kernel.initial.push_back(reader.read_number(line));
    reader.expect_end_of_line(line);

    while (true) {
        line = reader.next("transition or end");
        std::string word;
        line >> word;
        if (word == "end") break;
        if (word != "transition") reader.fail("expected 'transition' or 'end', got '" + word + "'");
        const std::size_t h = reader.read_count(line, "layer");
        const std::size_t local = reader.read_count(line, "state");
        const std::size_t a = reader.read_count(line, "action");
        if (h + 1 >= horizon) reader.fail("no transition rows leave the last layer");
        if (local >= structure.layer_size(h) || a >= actions) reader.fail("state or action out of range");
        reader.expect_keyword(line, ":");
        const std::size_t s = structure.layer_begin(h) + local;
        if (seen[structure.pair_index(s, a)]) reader.fail("duplicate transition row");
        seen[structure.pair_index(s, a)] = true;
        const std::size_t offset = structure.row_offset(s, a);
        for (std::size_t j = 0; j < structure.row_length(s); ++j) kernel.rows[offset + j] = reader.read_number(line);
        reader.expect_end_of_line(line);
    }
    for (std::size_t s = 0; s < structure.state_count(); ++s) {
        for (std::size_t a = 0; a < actions && structure.has_row(s); ++a) {
            if (!seen[structure.pair_index(s, a)]) {
                throw InvalidInput("missing transition row for state " + std::to_string(s) + ", action " +
                                   std::to_string(a));
            }
        }
    }
    return LayeredMdp(std::move(structure), std::move(kernel));
}

void write_losses(std::ostream& out, std::size_t states, std::size_t actions,
                  const std::vector<LossTable>& episodes) {
    out << "scalefree-losses 1\n";
    out << "states " << states << " actions " << actions << " episodes " << episodes.size() << "\n";
    for (std::size_t t = 0; t < episodes.size(); ++t) {
        if (episodes[t].size() != states * actions) throw InvalidInput("loss table has wrong size");
        out << "episode " << t + 1 << "\n";
        for (std::size_t s = 0; s < states; ++s) {
            for (std::size_t a = 0; a < actions; ++a) {
                if (a > 0) out << ' ';
                out << format_number(episodes[t][s * actions + a]);
            }
            out << "\n";
        }
    }
    out << "end\n";
}

std::vector<LossTable> read_losses(std::istream& in, std::size_t* states_out, std::size_t* actions_out) {
    LineReader reader(in);
    expect_header(reader, "scalefree-losses");
    auto line = reader.next("states");
    reader.expect_keyword(line, "states");
    const std::size_t states = reader.read_count(line, "states");
    reader.expect_keyword(line, "actions");
    const std::size_t actions = reader.read_count(line, "actions");
    reader.expect_keyword(line, "episodes");
    const std::size_t count = reader.read_count(line, "episodes");
    reader.expect_end_of_line(line);

    std::vector<LossTable> episodes;
    episodes.reserve(count);
    for (std::size_t t = 0; t < count; ++t) {
        line = reader.next("episode");
        reader.expect_keyword(line, "episode");
        if (reader.read_count(line, "episode index") != t + 1) reader.fail("episodes out of order");
        reader.expect_end_of_line(line);
        LossTable table(states * actions);
        for (std::size_t s = 0; s < states; ++s) {
            line = reader.next("loss row");
            for (std::size_t a = 0; a < actions; ++a) table[s * actions + a] = reader.read_number(line);
            reader.expect_end_of_line(line);
        }
        episodes.push_back(std::move(table));
    }
    line = reader.next("end");
    reader.expect_keyword(line, "end");
    if (states_out != nullptr) *states_out = states;
    if (actions_out != nullptr) *actions_out = actions;
    return episodes;
}

}  // namespace scalefree
