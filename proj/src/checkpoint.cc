// Copyright (C) 2026 The PPOW Authors
// SPDX-License-Identifier: Apache-2.0

#include "ppow/checkpoint.h"

#include <charconv>
#include <fstream>
#include <sstream>

namespace ppow {

namespace {

constexpr const char* kMagic = "PPOWCKPT";

std::string shape_string(const std::vector<std::size_t>& dims) {
  std::string s = "shape(";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(dims[i]);
  }
  return s + ")";
}

std::string describe(const DrafterShape& s) {
  return "(vocab=" + std::to_string(s.vocab) + " embed=" + std::to_string(s.embed) +
         " feature=" + std::to_string(s.feature) + " context=" + std::to_string(s.context) +
         " hidden=" + std::to_string(s.hidden) + ")";
}

CheckpointError corrupt(const std::string& what) {
  return CheckpointError(CheckpointError::Kind::kCorrupt, "checkpoint corrupted: " + what);
}

}  // namespace

void save_checkpoint(const std::string& path, const DrafterParameters& params,
                     const ConfigEcho& config_echo) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw CheckpointError(CheckpointError::Kind::kIo, "cannot write " + path);
  const DrafterShape& s = params.shape();
  out << kMagic << " v" << kCheckpointVersion << "\n";
  out << "header vocab=" << s.vocab << " embed=" << s.embed
      << " feature=" << s.feature << " context=" << s.context
      << " hidden=" << s.hidden << "\n";
  char buf[64];
  for (Block b : kAllBlocks) {
    out << block_name(b) << " " << shape_string(block_dims(s, b));
    for (double v : params.block(b)) {
      auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
      out << " " << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
    }
    out << "\n";
  }
  out << "end\n";
  for (const auto& [k, v] : config_echo) out << "# " << k << " = " << v << "\n";
  if (!out) throw CheckpointError(CheckpointError::Kind::kIo, "write failed: " + path);
}

DrafterParameters load_checkpoint(const std::string& path,
                                  const std::optional<DrafterShape>& expected) {
  std::ifstream in(path);
  if (!in) throw CheckpointError(CheckpointError::Kind::kIo, "cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw corrupt("missing magic line");
  {
    std::istringstream ss(line);
    std::string magic, version;
    ss >> magic >> version;
    if (magic != kMagic) throw corrupt("bad magic");
    if (version != "v" + std::to_string(kCheckpointVersion)) {
      throw CheckpointError(CheckpointError::Kind::kVersion,
                            "checkpoint version " + version + " unsupported");
    }
  }

  DrafterShape shape;
  if (!std::getline(in, line)) throw corrupt("missing header");
  {
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    if (word != "header") throw corrupt("missing header");
    int seen = 0;
    while (ss >> word) {
      auto eq = word.find('=');
      if (eq == std::string::npos) throw corrupt("malformed header field " + word);
      std::string key = word.substr(0, eq);
      std::size_t value = 0;
      auto val = std::string_view(word).substr(eq + 1);
      auto [p, ec] = std::from_chars(val.data(), val.data() + val.size(), value);
      if (ec != std::errc() || p != val.data() + val.size()) {
        throw corrupt("malformed header value " + word);
      }
      if (key == "vocab") shape.vocab = value;
      else if (key == "embed") shape.embed = value;
      else if (key == "feature") shape.feature = value;
      else if (key == "context") shape.context = value;
      else if (key == "hidden") shape.hidden = value;
      else throw corrupt("unknown header field " + key);
      ++seen;
    }
    if (seen != 5) throw corrupt("incomplete header");
  }
  if (expected && !(*expected == shape)) {
    throw CheckpointError(
        CheckpointError::Kind::kShape,
        "checkpoint shape " + describe(shape) + " does not match run " + describe(*expected));
  }

  DrafterParameters params = [&] {
    try {
      return DrafterParameters(shape);
    } catch (const ModelError& e) {
      throw corrupt(e.what());
    }
  }();

  for (Block b : kAllBlocks) {
    if (!std::getline(in, line)) {
      throw corrupt("truncated before block " + std::string(block_name(b)));
    }
    std::istringstream ss(line);
    std::string name, dims;
    ss >> name >> dims;
    if (name != block_name(b)) throw corrupt("expected block " + std::string(block_name(b)));
    if (dims != shape_string(block_dims(shape, b))) {
      throw corrupt("block " + name + " has " + dims);
    }
    auto dst = params.mutable_block(b);
    std::string tok;
    std::size_t n = 0;
    while (ss >> tok) {
      if (n >= dst.size()) throw corrupt("block " + name + " has too many values");
      double v;
      auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || p != tok.data() + tok.size()) {
        throw corrupt("bad value in block " + name);
      }
      dst[n++] = v;
    }
    if (n != dst.size()) {
      throw corrupt("block " + name + " has " + std::to_string(n) + " of " +
                    std::to_string(dst.size()) + " values");
    }
  }
  if (!std::getline(in, line) || line != "end") throw corrupt("missing end marker");
  return params;
}

}  // namespace ppow
