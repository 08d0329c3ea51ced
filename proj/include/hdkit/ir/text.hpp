#pragma once

#include <string>

#include "hdkit/ir/ir.hpp"

namespace hdkit::ir {

// Line-oriented UTF-8 program text, '#' comments. One declaration per line:
//   attr <key> <value>
//   node <id> primitive <op> [key=value ...]
//   node <id> parallel_loop trip=<n> out=<type> {      ... body ... }
//   node <id> stage_loop <stage> sim=<tag> randproj=<0|1> [epochs=<n>] { ... }
//   node <id> leaf out=<type> expr=(<prefix expression>)
//   edge <src>:<port> -> <dst>:<port> <shape> <elem>
//   perf <node> <begin> <end> <stride>
//   bind in <name> <shape> <elem> -> <node>:<port>
//   bind out <name> <- <node>:<port>
// Types as single tokens read scalar:<elem>, vec:<d>:<elem>, mat:<r>x<d>:<elem>.
// Bodies nest between '{' and a matching '}' line.
std::string to_text(const Program& p);

// Parses without validating; throws Error naming the line on any problem.
Program from_text(const std::string& text);

void save_program(const std::string& path, const Program& p);
Program load_program(const std::string& path);

std::string expr_to_text(const Expr& e);
Expr expr_from_text(const std::string& text);

}  // namespace hdkit::ir
