#include "hdkit/apps/cluster.hpp"

#include "hdkit/ir/validate.hpp"
#include "hdkit/ops.hpp"
#include "hdkit/passes/passes.hpp"

namespace hdkit::apps {

namespace ir = hdkit::ir;
using backend::BackendTag;
using backend::Value;

namespace {

// Per-position majority vote over the members' packed encodings; sign(0) is
// +1, matching the sign of the element-wise member sum.
Hypervector majority_center(const Hypermatrix& encoded,
                            const std::vector<std::int64_t>& members) {
  std::int64_t d = encoded.dim();
  std::vector<std::int32_t> plus(static_cast<std::size_t>(d), 0);
  for (std::int64_t m : members) {
    auto words = encoded.row_words(m);
    for (std::int64_t i = 0; i < d; ++i)
      plus[static_cast<std::size_t>(i)] +=
          static_cast<std::int32_t>((words[static_cast<std::size_t>(i >> 6)] >> (i & 63)) & 1u);
  }
  Hypervector center(ElementType::Bin1, d);
  std::int64_t n = static_cast<std::int64_t>(members.size());
  for (std::int64_t i = 0; i < d; ++i)
    center.packed().set(i, 2 * plus[static_cast<std::size_t>(i)] >= n);
  return center;
}

std::int64_t total_hamming(const Hypermatrix& encoded, const Hypermatrix& centers,
                           const std::vector<std::int64_t>& assignments) {
  std::int64_t total = 0;
  for (std::int64_t i = 0; i < encoded.rows(); ++i) {
    Hypervector row = encoded.row_copy(i);
    Hypervector c = centers.row_copy(assignments[static_cast<std::size_t>(i)]);
    total += ops::hamming(row, c);
  }
  return total;
}

}  // namespace

ClusterState cluster(const Dataset& ds, const ClusterOptions& opt) {
  std::int64_t n = ds.samples();
  std::int64_t f = ds.feature_count();
  if (opt.k < 1) throw Error("cluster: k must be positive");
  if (opt.k > n) throw Error("cluster: k exceeds the number of samples");

  std::uint64_t enc_seed = CounterRng::mix(opt.seed ^ 0x454e43u);
  Hypermatrix encoder = ops::gaussian_hm(opt.dim, f, ElementType::F32, enc_seed);
  Hypermatrix projection = ops::matrix_transpose(encoder);

  // encode every sample once (host-side copies feed the center updates)
  ir::Program enc_prog = make_encoding_program(n, f, opt.dim);
  std::map<std::string, Value> enc_in;
  enc_in.emplace("queries", Value(ds.features));
  enc_in.emplace("projection", Value(projection));
  backend::ExecReport enc_rep = backend::execute(enc_prog, enc_in, opt.backend, opt.seed, opt.profile);
  Hypermatrix encoded = ops::sign_packed(enc_rep.outputs.at("encoded").matrix());

  // seed centers from k distinct encoded samples
  CounterRng choice(opt.seed, rng_stream::kChoice);
  std::vector<std::int64_t> picks;
  choice.sample_without_replacement(n, opt.k, std::back_inserter(picks));
  Hypermatrix centers(ElementType::Bin1, opt.k, opt.dim);
  for (std::int64_t c = 0; c < opt.k; ++c)
    centers.set_row(c, encoded.row_copy(picks[static_cast<std::size_t>(c)]));

  // assignment program: Hamming inference over raw features, binarized so the
  // packed centers drop straight into the classes slot
  ir::Program assign_prog = passes::binarize(
      make_inference_program(n, f, opt.dim, opt.k, ir::SimilarityTag::Hamming), {});

  ClusterState st;
  st.assignments.assign(static_cast<std::size_t>(n), -1);
  for (std::int64_t it = 0; it < opt.max_iters; ++it) {
    std::map<std::string, Value> in;
    in.emplace("queries", Value(ds.features));
    in.emplace("classes", Value(centers));
    in.emplace("projection", Value(projection));
    backend::ExecReport rep = backend::execute(assign_prog, in, opt.backend, opt.seed, opt.profile);
    const Hypervector& lbl = rep.outputs.at("labels").vector();

    std::vector<std::int64_t> next(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) next[static_cast<std::size_t>(i)] = lbl.get_as_int(i);
    st.iterations = it + 1;
    st.objective_history.push_back(total_hamming(encoded, centers, next));
    bool stable = next == st.assignments;
    st.assignments = std::move(next);
    if (stable) break;

    // majority-vote center update; empty clusters reseed from the sample
    // farthest from its current center
    std::vector<std::vector<std::int64_t>> members(static_cast<std::size_t>(opt.k));
    for (std::int64_t i = 0; i < n; ++i)
      members[static_cast<std::size_t>(st.assignments[static_cast<std::size_t>(i)])].push_back(i);
    std::int64_t farthest = -1, farthest_dist = -1;
    for (std::int64_t i = 0; i < n; ++i) {
      Hypervector row = encoded.row_copy(i);
      Hypervector c = centers.row_copy(st.assignments[static_cast<std::size_t>(i)]);
      std::int64_t dist = ops::hamming(row, c);
      if (dist > farthest_dist) {
        farthest_dist = dist;
        farthest = i;
      }
    }
    for (std::int64_t c = 0; c < opt.k; ++c) {
      if (members[static_cast<std::size_t>(c)].empty()) {
        centers.set_row(c, encoded.row_copy(farthest));
      } else {
        centers.set_row(c, majority_center(encoded, members[static_cast<std::size_t>(c)]));
      }
    }
  }

  st.centers = std::move(centers);
  return st;
}

}  // namespace hdkit::apps
