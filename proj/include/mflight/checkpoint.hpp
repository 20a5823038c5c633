#pragma once

// Plain-text parameter checkpoints. Values are printed with 17 significant
// digits, so save -> load -> save is byte-identical.

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mflight/agent.hpp"
#include "mflight/ctl.hpp"
#include "mflight/error.hpp"
#include "mflight/io.hpp"

namespace mflight {

inline constexpr std::string_view kCheckpointHeader = "MFRL-CKPT v1";

struct Checkpoint {
  PolicyParams params;
  /// Source-phase controller; rebuilt by replaying its reward log.
  std::optional<TransferController> controller;
};

namespace detail {

inline void write_values(std::string& out, std::span<const double> v, std::size_t per_line) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    out += format_double(v[i]);
    out += (i + 1) % per_line == 0 || i + 1 == v.size() ? '\n' : ' ';
  }
}

inline void write_net(std::string& out, std::string_view name, const Mlp& net) {
  out += std::string(name) + " layers " + std::to_string(net.layers().size()) + "\n";
  for (const auto& L : net.layers()) {
    out += "weight " + std::to_string(L.out) + " " + std::to_string(L.in) + "\n";
    write_values(out, L.weight, L.in);
    out += "bias " + std::to_string(L.out) + "\n";
    write_values(out, L.bias, L.out);
  }
}

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  std::string_view token() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    const std::size_t start = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (start == pos_) throw CheckpointError("checkpoint truncated");
    return text_.substr(start, pos_ - start);
  }

  void expect(std::string_view word) {
    const auto t = token();
    if (t != word) throw CheckpointError("checkpoint: expected '" + std::string(word) + "', found '" + std::string(t) + "'");
  }

  std::size_t count() {
    const auto t = token();
    std::size_t v = 0;
    const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || p != t.data() + t.size()) throw CheckpointError("checkpoint: bad count '" + std::string(t) + "'");
    return v;
  }

  double real() {
    const std::string t(token());
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size()) throw CheckpointError("checkpoint: bad number '" + t + "'");
    return v;
  }

  void reals(std::vector<double>& out) {
    for (auto& v : out) v = real();
  }

  bool at_end() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    return pos_ == text_.size();
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

inline Mlp read_net(Reader& r, std::string_view name) {
  r.expect(name);
  r.expect("layers");
  const std::size_t n = r.count();
  if (n == 0 || n > 64) throw CheckpointError("checkpoint: implausible layer count");
  std::vector<std::size_t> sizes;
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l < n; ++l) {
    r.expect("weight");
    const std::size_t out = r.count();
    const std::size_t in = r.count();
    if (out == 0 || in == 0 || out > 1u << 16 || in > 1u << 16) throw CheckpointError("checkpoint: implausible layer shape");
    if (l == 0) sizes.push_back(in);
    else if (sizes.back() != in) throw CheckpointError("checkpoint: layer shapes do not chain");
    sizes.push_back(out);
    DenseLayer L(in, out);
    r.reals(L.weight);
    r.expect("bias");
    if (r.count() != out) throw CheckpointError("checkpoint: bias length mismatch");
    r.reals(L.bias);
    layers.push_back(std::move(L));
  }
  Mlp net(sizes);
  net.layers() = std::move(layers);
  return net;
}

}  // namespace detail

inline std::string serialize_checkpoint(const Checkpoint& ck) {
  std::string out(kCheckpointHeader);
  out += '\n';
  detail::write_net(out, "policy", ck.params.policy);
  out += "log_std " + std::to_string(ck.params.log_std.size()) + "\n";
  detail::write_values(out, ck.params.log_std, ck.params.log_std.size());
  detail::write_net(out, "value", ck.params.value);
  if (ck.controller) {
    const auto& c = *ck.controller;
    out += "controller " + std::to_string(c.config().k) + " " + format_double(c.config().gamma_cut) + " " +
           std::to_string(c.reward_history().size()) + "\n";
    if (!c.reward_history().empty()) detail::write_values(out, c.reward_history(), 10);
  } else {
    out += "controller none\n";
  }
  out += "end\n";
  return out;
}

inline Checkpoint parse_checkpoint(std::string_view text) {
  const auto nl = text.find('\n');
  const auto first = text.substr(0, nl);
  if (first != kCheckpointHeader) {
    if (first.rfind("MFRL-CKPT", 0) == 0)
      throw CheckpointError("unsupported checkpoint version '" + std::string(first) + "', expected '" +
                            std::string(kCheckpointHeader) + "'");
    throw CheckpointError("not a checkpoint: header '" + std::string(first.substr(0, 40)) + "'");
  }
  detail::Reader r(nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1));
  Checkpoint ck;
  ck.params.policy = detail::read_net(r, "policy");
  r.expect("log_std");
  const std::size_t na = r.count();
  if (na != ck.params.policy.output_size()) throw CheckpointError("checkpoint: log_std length mismatch");
  ck.params.log_std.resize(na);
  r.reals(ck.params.log_std);
  ck.params.value = detail::read_net(r, "value");
  if (ck.params.value.input_size() != ck.params.policy.input_size() || ck.params.value.output_size() != 1)
    throw CheckpointError("checkpoint: value network shape mismatch");
  r.expect("controller");
  const auto tag = r.token();
  if (tag != "none") {
    CtlConfig cfg;
    const auto [p, ec] = std::from_chars(tag.data(), tag.data() + tag.size(), cfg.k);
    if (ec != std::errc{} || p != tag.data() + tag.size()) throw CheckpointError("checkpoint: bad controller window");
    cfg.gamma_cut = r.real();
    std::vector<double> rewards(r.count());
    r.reals(rewards);
    try {
      ck.controller = TransferController::replay(cfg, rewards);
    } catch (const Error& e) {
      throw CheckpointError(std::string("checkpoint: bad controller section: ") + e.what());
    }
  }
  r.expect("end");
  if (!r.at_end()) throw CheckpointError("checkpoint: trailing content after 'end'");
  if (!ck.params.all_finite()) throw CheckpointError("checkpoint: non-finite parameter");
  return ck;
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  atomic_write(path, serialize_checkpoint(ck));
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const IoError& e) {
    throw CheckpointError(e.what());
  }
  return parse_checkpoint(text);
}

}  // namespace mflight
