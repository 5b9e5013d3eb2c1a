#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "uavsim/association.hpp"
#include "uavsim/error.hpp"
#include "uavsim/phase/cvae.hpp"
#include "uavsim/phase/lbl_ipso.hpp"
#include "uavsim/phase/link.hpp"
#include "uavsim/random.hpp"
#include "uavsim/scenario.hpp"
#include "uavsim/sim_channel.hpp"

namespace uavsim {

struct DatasetHeader {
  int layers = 0;
  int atoms = 0;
  int users = 0;
  int condition = 0;
  double thickness = 0.0;
  double wavelength = 0.0;
};

struct Dataset {
  DatasetHeader header;
  std::vector<LinkSample> samples;
  std::string error;  // set when generation stopped early
};

inline constexpr std::size_t kShardRecords = 10000;

// Labelled links from independent scenarios. Each scenario is associated with
// zero phases, then LBL-IPSO from the zero start labels every served link.
// Stops once `count` samples exist; `progress` sees the running total. A
// failing scenario ends generation early with `error` set.
inline Dataset generate_dataset(const ScenarioConfig& cfg, std::size_t count, std::uint64_t seed,
                                const LblOptions& lbl = {},
                                const std::function<void(std::size_t)>& progress = {}) {
  Dataset d;
  d.header = {cfg.layers, cfg.atoms, cfg.users, link_condition_size(cfg.atoms, cfg.users), cfg.thickness,
              cfg.wavelength};
  d.samples.reserve(count);
  const TransferSet link_t =
      build_transfers(SimGeometry::make(cfg.layers, cfg.atoms, cfg.thickness, cfg.wavelength), cfg.wavelength, 1);
  for (std::uint64_t i = 0; d.samples.size() < count; ++i) {
    const std::uint64_t sseed = derive_seed({seed, tag_hash("dataset"), i});
    Scenario s;
    try {
      s = generate_scenario(cfg, sseed);
    } catch (const Error& e) {
      d.error = e.what();
      break;
    }
    const TransferSet t = build_transfers(s);
    Rng rng(derive_seed({sseed, tag_hash("channels")}));
    const ChannelRealization c = sample_channels(s, rng);
    const PhaseTensor zero(s.uav_count(), cfg.layers, cfg.atoms);
    const AssociationMatrix assoc = associate(rate_table(s, t, c, zero));
    const PhaseTensor phases = lbl_ipso(assoc, t, c, zero, lbl);
    for (int m = 0; m < s.uav_count() && d.samples.size() < count; ++m) {
      const int k = assoc.served_user(m);
      if (k < 0) continue;
      d.samples.push_back(make_link_sample(s, c, link_t, phases, m, k));
    }
    if (progress) progress(d.samples.size());
  }
  return d;
}

// Record-per-sample binary container. Header: magic, version, shape and SIM
// geometry. Record: condition, phases, reference capacity, served index,
// noise, powers, then every user channel as (re, im) pairs. Footer: "DSEND"
// and the record count, so truncated files are detected.
namespace detail {

inline constexpr char kDatasetMagic[8] = {'U', 'A', 'V', 'S', 'I', 'M', 'D', 'S'};
inline constexpr std::uint32_t kDatasetVersion = 1;
inline constexpr char kDatasetFooter[5] = {'D', 'S', 'E', 'N', 'D'};

inline void write_shard(const std::string& path, const DatasetHeader& h, const LinkSample* first, std::size_t n) {
  std::ofstream o(path, std::ios::binary);
  if (!o) throw ConfigError("cannot write dataset " + path);
  o.write(kDatasetMagic, 8);
  put(o, kDatasetVersion);
  for (int v : {h.layers, h.atoms, h.users, h.condition}) put<std::int32_t>(o, v);
  put(o, h.thickness);
  put(o, h.wavelength);
  for (std::size_t r = 0; r < n; ++r) {
    const LinkSample& s = first[r];
    o.write(reinterpret_cast<const char*>(s.condition.data()), static_cast<std::streamsize>(h.condition * sizeof(double)));
    o.write(reinterpret_cast<const char*>(s.phases.data()),
            static_cast<std::streamsize>(s.phases.size() * sizeof(double)));
    put(o, s.capacity);
    put<std::int32_t>(o, s.served);
    put(o, s.noise);
    o.write(reinterpret_cast<const char*>(s.powers.data()), static_cast<std::streamsize>(h.users * sizeof(double)));
    for (const auto& ch : s.channels)
      o.write(reinterpret_cast<const char*>(ch.data()), static_cast<std::streamsize>(h.atoms * sizeof(cplx)));
  }
  o.write(kDatasetFooter, 5);
  put<std::uint64_t>(o, n);
  if (!o) throw ConfigError("failed writing dataset " + path);
}

inline void read_shard(const std::string& path, Dataset& d, bool first) {
  std::ifstream i(path, std::ios::binary);
  if (!i) throw ConfigError("cannot open dataset " + path);
  char magic[8];
  i.read(magic, 8);
  if (!i || !std::equal(magic, magic + 8, kDatasetMagic)) throw ConfigError(path + " is not a dataset file");
  if (get<std::uint32_t>(i) != kDatasetVersion) throw ConfigError("unsupported dataset version in " + path);
  DatasetHeader h;
  h.layers = get<std::int32_t>(i);
  h.atoms = get<std::int32_t>(i);
  h.users = get<std::int32_t>(i);
  h.condition = get<std::int32_t>(i);
  h.thickness = get<double>(i);
  h.wavelength = get<double>(i);
  if (h.layers < 1 || h.atoms < 1 || h.users < 1 || h.condition != link_condition_size(h.atoms, h.users))
    throw ConfigError("corrupt dataset header in " + path);
  if (first)
    d.header = h;
  else if (h.layers != d.header.layers || h.atoms != d.header.atoms || h.users != d.header.users ||
           h.thickness != d.header.thickness || h.wavelength != d.header.wavelength)
    throw ConfigError("dataset shard " + path + " does not match the first shard");

  const auto file_size = std::filesystem::file_size(path);
  const std::size_t record = sizeof(double) * (static_cast<std::size_t>(h.condition) + h.layers * h.atoms + 2 + h.users) +
                             sizeof(std::int32_t) + sizeof(cplx) * static_cast<std::size_t>(h.users) * h.atoms;
  const std::size_t head = 8 + 4 + 4 * 4 + 2 * 8;
  const std::size_t foot = 5 + 8;
  if (file_size < head + foot || (file_size - head - foot) % record != 0)
    throw ConfigError("dataset " + path + " is truncated or corrupt");
  const std::size_t n = (file_size - head - foot) / record;
  for (std::size_t r = 0; r < n; ++r) {
    LinkSample s;
    s.condition.resize(h.condition);
    i.read(reinterpret_cast<char*>(s.condition.data()), static_cast<std::streamsize>(h.condition * sizeof(double)));
    s.phases.resize(static_cast<std::size_t>(h.layers) * h.atoms);
    i.read(reinterpret_cast<char*>(s.phases.data()), static_cast<std::streamsize>(s.phases.size() * sizeof(double)));
    s.capacity = get<double>(i);
    s.served = get<std::int32_t>(i);
    s.noise = get<double>(i);
    s.powers.resize(h.users);
    i.read(reinterpret_cast<char*>(s.powers.data()), static_cast<std::streamsize>(h.users * sizeof(double)));
    s.channels.assign(static_cast<std::size_t>(h.users), Eigen::VectorXcd(h.atoms));
    for (auto& ch : s.channels)
      i.read(reinterpret_cast<char*>(ch.data()), static_cast<std::streamsize>(h.atoms * sizeof(cplx)));
    if (!i || s.served < 0 || s.served >= h.users) throw ConfigError("corrupt record in " + path);
    d.samples.push_back(std::move(s));
  }
  char footer[5];
  i.read(footer, 5);
  if (!i || !std::equal(footer, footer + 5, kDatasetFooter) || get<std::uint64_t>(i) != n)
    throw ConfigError("dataset " + path + " has a bad footer");
}

inline std::string shard_path(const std::filesystem::path& base, std::size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "-%04zu", index);
  return (base.parent_path() / (base.stem().string() + buf + base.extension().string())).string();
}

}  // namespace detail

// Writes `path` directly when the dataset fits one shard, otherwise
// <stem>-0000<ext>, <stem>-0001<ext>, ... Returns the files written.
inline std::vector<std::string> write_dataset(const Dataset& d, const std::string& path) {
  std::vector<std::string> files;
  const std::size_t n = d.samples.size();
  if (n <= kShardRecords) {
    detail::write_shard(path, d.header, d.samples.data(), n);
    files.push_back(path);
    return files;
  }
  for (std::size_t s = 0, start = 0; start < n; ++s, start += kShardRecords) {
    files.push_back(detail::shard_path(path, s));
    detail::write_shard(files.back(), d.header, d.samples.data() + start, std::min(kShardRecords, n - start));
  }
  return files;
}

// Reads a single file, or the shard sequence written for `path`.
inline Dataset read_dataset(const std::string& path) {
  Dataset d;
  if (std::filesystem::exists(path)) {
    detail::read_shard(path, d, true);
    return d;
  }
  for (std::size_t s = 0;; ++s) {
    const std::string p = detail::shard_path(path, s);
    if (!std::filesystem::exists(p)) {
      if (s == 0) throw ConfigError("dataset " + path + " not found");
      break;
    }
    detail::read_shard(p, d, s == 0);
  }
  return d;
}

inline CvaeShape shape_for(const DatasetHeader& h) {
  CvaeShape s;
  s.layers = h.layers;
  s.atoms = h.atoms;
  s.users = h.users;
  return s;
}

}  // namespace uavsim
