#include "hdkit/backend/accel.hpp"

#include <fstream>
#include <sstream>

#include "hdkit/ops.hpp"

namespace hdkit::backend {

AccelProfile AccelProfile::from_text(const std::string& text, const std::string& name) {
  AccelProfile p;
  p.name = name;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::size_t b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    std::size_t e = line.find_last_not_of(" \t\r");
    line = line.substr(b, e - b + 1);
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw Error("device profile line " + std::to_string(line_no) + ": expected key=value");
    std::string key = line.substr(0, eq);
    std::string val = line.substr(eq + 1);
    if (key == "dim_max") p.dim_max = std::stoll(val);
    else if (key == "classes_max") p.classes_max = std::stoll(val);
    else if (key == "cycles_encode_per_elem") p.cycles_encode_per_elem = std::stod(val);
    else if (key == "cycles_infer_per_elem") p.cycles_infer_per_elem = std::stod(val);
    else if (key == "cycles_train_per_elem") p.cycles_train_per_elem = std::stod(val);
    else if (key == "host_link_cost") p.host_link_cost = std::stod(val);
    else if (key == "early_exit") p.early_exit = val == "1" || val == "true";
    else throw Error("device profile line " + std::to_string(line_no) + ": unknown key '" + key + "'");
  }
  return p;
}

AccelProfile AccelProfile::from_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open device profile '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  std::size_t slash = path.find_last_of("/\\");
  return from_text(ss.str(), slash == std::string::npos ? path : path.substr(slash + 1));
}

void AccelDevice::configure(std::int64_t dim, std::int64_t classes) {
  if (dim <= 0 || classes <= 0) throw Error("accel configure: non-positive shape");
  if (dim > profile_.dim_max || classes > profile_.classes_max)
    throw Error("accel configure: dim " + std::to_string(dim) + " / classes " +
                std::to_string(classes) + " exceed device capacity (" +
                std::to_string(profile_.dim_max) + ", " + std::to_string(profile_.classes_max) + ")");
  dim_ = dim;
  classes_ = classes;
  encoder_set_ = classes_set_ = false;
  signs_dirty_ = false;
}

void AccelDevice::charge_transfer(std::int64_t bytes) {
  counters_.bytes_moved += bytes;
  counters_.cycles += profile_.host_link_cost * static_cast<double>((bytes + 7) / 8);
}

namespace {
std::int64_t matrix_bytes(const Hypermatrix& m) {
  if (m.is_packed()) return m.rows() * m.words_per_row() * 8;
  return m.rows() * m.dim() * (bit_width(m.elem()) / 8);
}
}  // namespace

void AccelDevice::write_encoder(const Hypermatrix& dxf) {
  if (!configured()) throw Error("accel: configure before writing the encoder");
  if (dxf.rows() != dim_)
    throw Error("accel: encoder rows " + std::to_string(dxf.rows()) +
                " do not match configured dim " + std::to_string(dim_));
  encoder_ = dxf;
  encoder_set_ = true;
  charge_transfer(matrix_bytes(dxf));
}

void AccelDevice::write_classes(const Hypermatrix& kxd) {
  if (!configured()) throw Error("accel: configure before writing class memory");
  if (kxd.rows() != classes_ || kxd.dim() != dim_)
    throw Error("accel: class matrix " + std::to_string(kxd.rows()) + "x" +
                std::to_string(kxd.dim()) + " does not match configured " +
                std::to_string(classes_) + "x" + std::to_string(dim_));
  class_mem_ = kxd;
  classes_set_ = true;
  signs_dirty_ = true;
  charge_transfer(matrix_bytes(kxd));
}

Hypermatrix AccelDevice::read_classes() {
  if (!classes_set_) throw Error("accel: class memory read before write");
  charge_transfer(matrix_bytes(class_mem_));
  return class_mem_;
}

void AccelDevice::repack_classes() {
  if (!signs_dirty_) return;
  class_signs_ = ops::sign_packed(class_mem_);
  signs_dirty_ = false;
}

Hypervector AccelDevice::encode_signs(const Hypervector& features) {
  if (!encoder_set_) throw Error("accel: encode requires a written encoder");
  if (features.dim() != encoder_.dim())
    throw Error("accel: feature length " + std::to_string(features.dim()) +
                " does not match encoder width " + std::to_string(encoder_.dim()));
  counters_.elements_processed += dim_ * encoder_.dim();
  counters_.cycles += profile_.cycles_encode_per_elem * static_cast<double>(dim_ * encoder_.dim());
  // row d of the encoder against the feature vector, f64 accumulation in
  // ascending feature order: identical bits to the host reference path
  Hypervector out(ElementType::Bin1, dim_);
  dispatch_dense(encoder_.elem(), [&](auto tag) {
    using T = decltype(tag);
    if (features.elem() != encoder_.elem())
      throw Error("accel: feature/encoder element type mismatch");
    auto f = features.values<T>();
    for (std::int64_t d = 0; d < dim_; ++d) {
      auto row = encoder_.row_values<T>(d);
      if constexpr (std::is_integral_v<T>) {
        std::int64_t acc = 0;
        for (std::size_t k = 0; k < f.size(); ++k)
          acc += static_cast<std::int64_t>(row[k]) * static_cast<std::int64_t>(f[k]);
        out.packed().set(d, acc >= 0);
      } else {
        double acc = 0.0;
        for (std::size_t k = 0; k < f.size(); ++k)
          acc += static_cast<double>(row[k]) * static_cast<double>(f[k]);
        out.packed().set(d, acc >= 0.0);
      }
    }
  });
  return out;
}

Hypervector AccelDevice::encode(const Hypervector& features) {
  return encode_signs(features);
}

void AccelDevice::train_one(const Hypervector& features, std::int64_t label) {
  if (!classes_set_) throw Error("accel: train before class memory write");
  if (label < 0 || label >= classes_) throw Error("accel: label out of range");
  Hypervector enc = encode_signs(features);
  counters_.cycles += profile_.cycles_train_per_elem * static_cast<double>(dim_);
  counters_.elements_processed += dim_;
  dispatch_dense(class_mem_.elem(), [&](auto tag) {
    using T = decltype(tag);
    auto row = class_mem_.row_values<T>(label);
    for (std::int64_t d = 0; d < dim_; ++d)
      row[static_cast<std::size_t>(d)] = static_cast<T>(
          row[static_cast<std::size_t>(d)] + static_cast<T>(enc.packed().sign_at(d)));
  });
  signs_dirty_ = true;
}

std::int64_t AccelDevice::infer_one(const Hypervector& features) {
  if (!classes_set_) throw Error("accel: infer before class memory write");
  repack_classes();
  Hypervector enc = encode_signs(features);

  const std::int64_t words = class_signs_.words_per_row();
  if (!profile_.early_exit) {
    std::int64_t best = 0, best_d = dim_ + 1;
    for (std::int64_t c = 0; c < classes_; ++c) {
      auto row = class_signs_.row_words(c);
      std::int64_t mism = 0;
      for (std::int64_t w = 0; w < words; ++w)
        mism += std::popcount(enc.packed().word(w) ^ row[static_cast<std::size_t>(w)]);
      if (mism < best_d) { best_d = mism; best = c; }
    }
    counters_.elements_processed += classes_ * dim_;
    counters_.cycles += profile_.cycles_infer_per_elem * static_cast<double>(classes_ * dim_);
    return best;
  }

  // Progressive evaluation in 64-position chunks. A candidate is dropped once
  // even a mismatch-free tail cannot bring it under some other candidate's
  // worst case: cur(c) - best_cur - remaining > 0. Survivors finish fully, so
  // the result equals the full argmin with lowest-index ties.
  std::vector<std::int64_t> cur(static_cast<std::size_t>(classes_), 0);
  std::vector<bool> alive(static_cast<std::size_t>(classes_), true);
  std::int64_t processed = 0;
  for (std::int64_t w = 0; w < words; ++w) {
    std::int64_t chunk = std::min<std::int64_t>(64, dim_ - w * 64);
    std::int64_t best_cur = -1;
    for (std::int64_t c = 0; c < classes_; ++c) {
      if (!alive[static_cast<std::size_t>(c)]) continue;
      cur[static_cast<std::size_t>(c)] += std::popcount(
          enc.packed().word(w) ^ class_signs_.row_words(c)[static_cast<std::size_t>(w)]);
      processed += chunk;
      if (best_cur < 0 || cur[static_cast<std::size_t>(c)] < best_cur)
        best_cur = cur[static_cast<std::size_t>(c)];
    }
    std::int64_t remaining = dim_ - (w + 1) * 64;
    if (remaining > 0) {
      for (std::int64_t c = 0; c < classes_; ++c)
        if (alive[static_cast<std::size_t>(c)] &&
            cur[static_cast<std::size_t>(c)] - best_cur - remaining > 0)
          alive[static_cast<std::size_t>(c)] = false;
    }
  }
  std::int64_t best = -1, best_d = 0;
  for (std::int64_t c = 0; c < classes_; ++c) {
    if (!alive[static_cast<std::size_t>(c)]) continue;
    if (best < 0 || cur[static_cast<std::size_t>(c)] < best_d) {
      best = c;
      best_d = cur[static_cast<std::size_t>(c)];
    }
  }
  counters_.elements_processed += processed;
  counters_.cycles += profile_.cycles_infer_per_elem * static_cast<double>(processed);
  return best;
}

std::int64_t AccelDevice::retrain_one(const Hypervector& features, std::int64_t label) {
  if (label < 0 || label >= classes_) throw Error("accel: label out of range");
  std::int64_t pred = infer_one(features);
  if (pred == label) return pred;
  Hypervector enc = encode_signs(features);
  counters_.cycles += profile_.cycles_train_per_elem * static_cast<double>(2 * dim_);
  counters_.elements_processed += 2 * dim_;
  dispatch_dense(class_mem_.elem(), [&](auto tag) {
    using T = decltype(tag);
    auto t_row = class_mem_.row_values<T>(label);
    auto p_row = class_mem_.row_values<T>(pred);
    for (std::int64_t d = 0; d < dim_; ++d) {
      T e = static_cast<T>(enc.packed().sign_at(d));
      t_row[static_cast<std::size_t>(d)] = static_cast<T>(t_row[static_cast<std::size_t>(d)] + e);
      p_row[static_cast<std::size_t>(d)] = static_cast<T>(p_row[static_cast<std::size_t>(d)] - e);
    }
  });
  signs_dirty_ = true;
  return pred;
}

}  // namespace hdkit::backend
