#pragma once

#include "hdkit/ir/validate.hpp"

namespace hdkit::ir {

// Incremental program construction mirroring the primitive set one-to-one.
// Every method returns the handle of the value it defines: a node id
// ("matmul0", "sign1", ...) usable as an operand of later calls and as the
// target of red_perf / CLI perforation flags. input() handles name external
// bindings. Shapes are inferred as nodes are added, so arity and shape
// misuse fails at build time with the offending call's handle in the message.
class Builder {
 public:
  explicit Builder(std::uint64_t seed = 0);

  std::string input(const std::string& name, ValueType type);

  std::string create_hypervector(std::int64_t dim, ElementType elem, double fill = 0.0);
  std::string create_hypermatrix(std::int64_t rows, std::int64_t dim, ElementType elem,
                                 double fill = 0.0);
  std::string random_hypervector(std::int64_t dim, ElementType elem);
  std::string random_hypermatrix(std::int64_t rows, std::int64_t dim, ElementType elem);
  std::string gaussian_hypervector(std::int64_t dim, ElementType elem);
  std::string gaussian_hypermatrix(std::int64_t rows, std::int64_t dim, ElementType elem);

  std::string wrap_shift(const std::string& v, std::int64_t shift);
  std::string sign(const std::string& x);
  std::string sign_flip(const std::string& x);
  std::string absolute_value(const std::string& x);
  std::string cosine(const std::string& x);
  std::string add(const std::string& a, const std::string& b);
  std::string sub(const std::string& a, const std::string& b);
  std::string mul(const std::string& a, const std::string& b);
  std::string div(const std::string& a, const std::string& b);
  std::string l2norm(const std::string& x);
  std::string get_element(const std::string& x, std::int64_t row, std::int64_t col = -1);
  std::string type_cast(const std::string& x, ElementType to);
  std::string arg_min(const std::string& x);
  std::string arg_max(const std::string& x);
  std::string matrix_transpose(const std::string& m);
  std::string get_matrix_row(const std::string& m, std::int64_t row);
  std::string get_matrix_row(const std::string& m, const std::string& row_idx);
  std::string set_matrix_row(const std::string& m, const std::string& v, std::int64_t row);
  std::string set_matrix_row(const std::string& m, const std::string& v,
                             const std::string& row_idx);
  std::string cossim(const std::string& a, const std::string& b);
  std::string hamming_distance(const std::string& a, const std::string& b);
  std::string matmul(const std::string& a, const std::string& b);

  // Attach a perforation spec to the reducing node that produced `result`.
  void red_perf(const std::string& result, std::int64_t begin, std::int64_t end,
                std::int64_t stride);

  std::string encoding_loop(Program body, const std::string& queries,
                            const std::string& projection, StageAlgo algo = {});
  std::string inference_loop(Program body, const std::string& queries,
                             const std::string& classes, const std::string& projection,
                             StageAlgo algo = {});
  std::string training_loop(Program body, const std::string& queries,
                            const std::string& labels, const std::string& classes,
                            const std::string& projection, std::int64_t epochs,
                            StageAlgo algo = {});

  std::string parallel_loop(Program body, std::int64_t trip, ValueType out,
                            const std::vector<std::string>& operands);
  std::string leaf(Expr expr, ValueType out, const std::vector<std::string>& operands);

  void output(const std::string& name, const std::string& value);
  void attr(const std::string& key, const std::string& value);

  const ValueType& type_of(const std::string& handle) const;

  // Finalize: validates and returns the program. The builder is spent.
  Program build();

 private:
  std::string fresh(std::string_view base);
  void connect(const std::string& operand, const std::string& node, int port);
  std::string push(Node n, const std::vector<std::string>& operands);

  Program prog_;
  std::map<std::string, ValueType> types_;
  std::map<std::string, int> counters_;
  bool spent_ = false;
};

}  // namespace hdkit::ir
