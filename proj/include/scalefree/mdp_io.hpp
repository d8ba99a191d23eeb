#pragma once

#include <iosfwd>
#include <vector>

#include "scalefree/mdp.hpp"

namespace scalefree {

// Text format, version 1:
//
//   scalefree-mdp 1
//   horizon <H>
//   actions <A>
//   layers <n_0> ... <n_{H-1}>
//   initial <p_0> ... <p_{n_0 - 1}>
//   transition <layer> <state-in-layer> <action> : <p_0> ... <p_{n_{h+1} - 1}>
//   ...
//   end
//
// Numbers are written with 17 significant digits, so a write/read cycle
// reproduces every probability bit for bit. Blank lines and lines starting
// with '#' are ignored.
void write_mdp(std::ostream& out, const LayeredMdp& mdp);
LayeredMdp read_mdp(std::istream& in);

//   scalefree-losses 1
//   states <S> actions <A> episodes <T>
//   episode <t>
//   <S lines of A numbers>
//   ...
//   end
void write_losses(std::ostream& out, std::size_t states, std::size_t actions,
                  const std::vector<LossTable>& episodes);
std::vector<LossTable> read_losses(std::istream& in, std::size_t* states = nullptr, std::size_t* actions = nullptr);

}  // namespace scalefree
