#include "ttrnn/checkpoint.hpp"

#include <fstream>

#include "ttrnn/binary_io.hpp"
#include "ttrnn/error.hpp"

namespace ttrnn {

namespace {

constexpr std::uint32_t kVersion = 1;
constexpr std::uint8_t kTagDense = 0;
constexpr std::uint8_t kTagTT = 1;
constexpr std::uint8_t kTagVector = 2;
constexpr std::uint64_t kMaxValues = std::uint64_t{1} << 28;

void write_vector(std::ostream& out, const std::vector<double>& v) {
  binio::write_u32(out, v.size());
  binio::write_doubles(out, v);
}

std::vector<double> read_vector(std::istream& in, const char* what) {
  const auto n = binio::read<std::uint32_t>(in, what);
  if (n > kMaxValues) throw FormatError(std::string("implausible length for ") + what);
  binio::require_bytes(in, 8 * std::uint64_t{n}, what);
  std::vector<double> v(n);
  binio::read_doubles(in, v, what);
  return v;
}

// Entries in the fixed order the model is rebuilt from.
struct Entry {
  std::string name;
  const LinearMap* map = nullptr;
  const std::vector<double>* vec = nullptr;
};

std::vector<Entry> entries_of(const SequenceModel& m) {
  std::vector<Entry> e{{"projection", &m.projection, nullptr}};
  if (m.cell.kind() == CellKind::SRNN) {
    const auto& p = m.cell.srnn();
    e.push_back({"cell.w_xh", &p.w_xh, nullptr});
    e.push_back({"cell.w_hh", &p.w_hh, nullptr});
    e.push_back({"cell.b_h", nullptr, &p.b_h});
  } else {
    const auto& p = m.cell.gru();
    e.push_back({"cell.w_xr", &p.w_xr, nullptr});
    e.push_back({"cell.w_hr", &p.w_hr, nullptr});
    e.push_back({"cell.w_xz", &p.w_xz, nullptr});
    e.push_back({"cell.w_hz", &p.w_hz, nullptr});
    e.push_back({"cell.w_xh", &p.w_xh, nullptr});
    e.push_back({"cell.w_hh", &p.w_hh, nullptr});
    e.push_back({"cell.b_r", nullptr, &p.b_r});
    e.push_back({"cell.b_z", nullptr, &p.b_z});
    e.push_back({"cell.b_h", nullptr, &p.b_h});
  }
  e.push_back({"output", &m.output, nullptr});
  return e;
}

std::vector<std::string> expected_names(CellKind kind) {
  if (kind == CellKind::SRNN) return {"projection", "cell.w_xh", "cell.w_hh", "cell.b_h", "output"};
  return {"projection", "cell.w_xr", "cell.w_hr", "cell.w_xz", "cell.w_hz", "cell.w_xh",
          "cell.w_hh",  "cell.b_r",  "cell.b_z",  "cell.b_h",  "output"};
}

}  // namespace

void write_linear_map(std::ostream& out, const LinearMap& map) {
  if (map.is_tt()) {
    write_tt(out, map.tt());
    return;
  }
  const DenseMatrix& d = map.dense();
  out.write("DNS1", 4);
  binio::write_u32(out, d.weight.rows());
  binio::write_u32(out, d.weight.cols());
  binio::write<std::uint8_t>(out, d.bias ? 1 : 0);
  binio::write_doubles(out, d.weight.values());
  if (d.bias) binio::write_doubles(out, *d.bias);
}

LinearMap read_linear_map(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4)) throw FormatError("truncated input while reading linear map");
  for (int i = 3; i >= 0; --i) in.putback(magic[i]);
  if (std::string(magic, 4) == "TTM1") return LinearMap(read_tt(in));
  binio::expect_magic(in, "DNS1", "dense matrix");
  const auto rows = binio::read<std::uint32_t>(in, "dense rows");
  const auto cols = binio::read<std::uint32_t>(in, "dense cols");
  if (rows == 0 || cols == 0 || std::uint64_t{rows} * cols > kMaxValues) {
    throw FormatError("implausible dense shape " + std::to_string(rows) + "x" + std::to_string(cols));
  }
  const auto flag = binio::read<std::uint8_t>(in, "bias flag");
  if (flag > 1) throw FormatError("bad bias flag in dense matrix");
  binio::require_bytes(in, 8 * (std::uint64_t{rows} * cols + (flag ? rows : 0)), "dense matrix values");
  DenseMatrix d{Matrix(rows, cols), std::nullopt};
  binio::read_doubles(in, d.weight.values(), "dense weight");
  if (flag) {
    d.bias.emplace(rows);
    binio::read_doubles(in, *d.bias, "dense bias");
  }
  return LinearMap(std::move(d));
}

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  out.write("TTRC", 4);
  binio::write<std::uint32_t>(out, kVersion);
  binio::write_string(out, ckpt.config_hash);
  binio::write_string(out, ckpt.config_text);
  binio::write<std::uint64_t>(out, ckpt.epoch);
  binio::write<std::uint8_t>(out, ckpt.model.task == TaskKind::Classification ? 0 : 1);
  binio::write<std::uint8_t>(out, ckpt.model.cell.kind() == CellKind::SRNN ? 0 : 1);
  const auto entries = entries_of(ckpt.model);
  binio::write_u32(out, entries.size());
  for (const Entry& e : entries) {
    binio::write_string(out, e.name);
    if (e.map) {
      binio::write<std::uint8_t>(out, e.map->is_tt() ? kTagTT : kTagDense);
      write_linear_map(out, *e.map);
    } else {
      binio::write<std::uint8_t>(out, kTagVector);
      write_vector(out, *e.vec);
    }
  }
  binio::write<std::uint8_t>(out, ckpt.adam ? 1 : 0);
  if (ckpt.adam) write_adam(out, *ckpt.adam);
  if (!out) throw FormatError("failed writing checkpoint");
}

Checkpoint read_checkpoint(std::istream& in) {
  binio::expect_magic(in, "TTRC", "checkpoint");
  const auto version = binio::read<std::uint32_t>(in, "version");
  if (version != kVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  std::string hash = binio::read_string(in, "config hash");
  std::string text = binio::read_string(in, "config text");
  const auto epoch = binio::read<std::uint64_t>(in, "epoch");
  const auto task = binio::read<std::uint8_t>(in, "task");
  const auto kind = binio::read<std::uint8_t>(in, "cell kind");
  if (task > 1 || kind > 1) throw FormatError("bad task or cell tag in checkpoint");
  const CellKind cell_kind = kind == 0 ? CellKind::SRNN : CellKind::GRU;
  const auto names = expected_names(cell_kind);
  const auto count = binio::read<std::uint32_t>(in, "entry count");
  if (count != names.size()) {
    throw FormatError("checkpoint holds " + std::to_string(count) + " entries, expected " +
                      std::to_string(names.size()));
  }
  std::vector<std::optional<LinearMap>> maps(count);
  std::vector<std::vector<double>> vecs(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::string name = binio::read_string(in, "entry name");
    if (name != names[i]) throw FormatError("unexpected entry '" + name + "', expected '" + names[i] + "'");
    const auto tag = binio::read<std::uint8_t>(in, "entry tag");
    const bool want_vector = name.find(".b_") != std::string::npos;
    if (want_vector != (tag == kTagVector) || tag > kTagVector) {
      throw FormatError("entry '" + name + "' has the wrong tag");
    }
    if (tag == kTagVector) {
      vecs[i] = read_vector(in, "bias vector");
    } else {
      maps[i] = read_linear_map(in);
      if (maps[i]->is_tt() != (tag == kTagTT)) throw FormatError("entry '" + name + "' tag mismatch");
    }
  }
  const auto has_adam = binio::read<std::uint8_t>(in, "adam flag");
  if (has_adam > 1) throw FormatError("bad adam flag");

  auto cell = [&]() {
    if (cell_kind == CellKind::SRNN) return Cell(SRNNParams{*maps[1], *maps[2], vecs[3]});
    return Cell(GRUParams{*maps[1], *maps[2], *maps[3], *maps[4], *maps[5], *maps[6], vecs[7],
                          vecs[8], vecs[9]});
  };
  Checkpoint ck{std::move(hash), std::move(text), epoch,
                SequenceModel{task == 0 ? TaskKind::Classification : TaskKind::Prediction,
                              *maps.front(), cell(), *maps.back()},
                std::nullopt};
  const SequenceModel& m = ck.model;
  const std::size_t hid = m.cell.hidden_dim();
  bool ok = m.projection.out_dim() == m.cell.input_dim() && m.output.in_dim() == hid;
  auto check_map = [&](const LinearMap& w, std::size_t in_dim) {
    ok = ok && !w.has_bias() && w.out_dim() == hid && w.in_dim() == in_dim;
  };
  if (cell_kind == CellKind::SRNN) {
    const auto& p = m.cell.srnn();
    check_map(p.w_xh, m.cell.input_dim());
    check_map(p.w_hh, hid);
    ok = ok && p.b_h.size() == hid;
  } else {
    const auto& p = m.cell.gru();
    for (const LinearMap* w : {&p.w_xr, &p.w_xz, &p.w_xh}) check_map(*w, p.w_xr.in_dim());
    for (const LinearMap* w : {&p.w_hr, &p.w_hz, &p.w_hh}) check_map(*w, hid);
    ok = ok && p.b_r.size() == hid && p.b_z.size() == hid && p.b_h.size() == hid;
  }
  if (!ok) throw FormatError("checkpoint layers have inconsistent shapes");

  if (has_adam) {
    ck.adam = read_adam(in);
    auto params = ck.model.parameters();
    if (!ck.adam->first_moment.empty()) {
      bool match = ck.adam->first_moment.size() == params.size();
      for (std::size_t i = 0; match && i < params.size(); ++i)
        match = ck.adam->first_moment[i].size() == params[i].values.size();
      if (!match) throw FormatError("optimizer state does not match the model parameters");
    }
  }
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + tmp.string());
    write_checkpoint(out, ckpt);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

}  // namespace ttrnn
