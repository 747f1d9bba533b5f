#include "vortexlab/io.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "json.hpp"
#include "vortexlab/util.hpp"

namespace vortexlab {

static_assert(std::endian::native == std::endian::little,
              "snapshot container assumes a little-endian host");

namespace {

nlohmann::json lattice_to_json(const Lattice& lat) {
  nlohmann::json j;
  j["shape"] = lat.shape;
  j["spacing"] = lat.spacing;
  j["origin"] = lat.origin;
  return j;
}

Lattice lattice_from_json(const nlohmann::json& j) {
  Lattice lat;
  lat.shape = j.at("shape").get<std::vector<int>>();
  lat.spacing = j.at("spacing").get<std::vector<double>>();
  lat.origin = j.at("origin").get<std::vector<double>>();
  if (lat.shape.size() != lat.spacing.size() || lat.shape.size() != lat.origin.size())
    throw ValidationError("snapshot: inconsistent grid descriptor");
  return lat;
}

}  // namespace

void write_snapshot(const FieldConfiguration& config, const std::string& path) {
  config.validate();
  const size_t n = config.size();

  nlohmann::json header;
  header["format"] = "vortexlab-snapshot";
  header["version"] = 1;
  header["encoding"] = "f64le";
  header["epsilon"] = config.epsilon;
  header["grid"] = lattice_to_json(config.lat);
  header["fields"] = nlohmann::json::array({
      {{"name", "u"}, {"components", 2}, {"values", 2 * n}},
      {{"name", "A"}, {"components", config.lat.dim()}, {"values", config.lat.dim() * n}},
  });
  const std::string htext = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open " + path + " for writing");
  const uint64_t hlen = htext.size();
  out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out.write(htext.data(), static_cast<std::streamsize>(htext.size()));
  out.write(reinterpret_cast<const char*>(config.u.data()),
            static_cast<std::streamsize>(2 * n * sizeof(double)));
  out.write(reinterpret_cast<const char*>(config.A.data()),
            static_cast<std::streamsize>(config.A.size() * sizeof(double)));
  if (!out) throw ValidationError("short write to " + path);
}

FieldConfiguration read_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  if (!in || hlen == 0 || hlen > (1u << 20)) throw ValidationError("snapshot: bad header length");
  std::string htext(hlen, '\0');
  in.read(htext.data(), static_cast<std::streamsize>(hlen));
  if (!in) throw ValidationError("snapshot: truncated header");
  nlohmann::json header = nlohmann::json::parse(htext);
  if (header.value("format", "") != "vortexlab-snapshot")
    throw ValidationError("snapshot: unrecognized format");
  if (header.value("encoding", "") != "f64le")
    throw ValidationError("snapshot: unsupported encoding");

  FieldConfiguration config;
  config.lat = lattice_from_json(header.at("grid"));
  config.epsilon = header.at("epsilon").get<double>();
  const size_t n = config.lat.size();
  config.u.resize(n);
  config.A.resize(n * config.lat.dim());
  in.read(reinterpret_cast<char*>(config.u.data()),
          static_cast<std::streamsize>(2 * n * sizeof(double)));
  in.read(reinterpret_cast<char*>(config.A.data()),
          static_cast<std::streamsize>(config.A.size() * sizeof(double)));
  if (!in) throw ValidationError("snapshot: truncated data section");
  config.validate();
  return config;
}

void write_field_csv(const FieldConfiguration& config, const std::string& path,
                     size_t max_nodes) {
  config.validate();
  const size_t n = config.size();
  if (n > max_nodes)
    throw ValidationError("write_field_csv: grid too large for CSV export");
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open " + path + " for writing");

  const int d = config.lat.dim();
  out << "index";
  for (int a = 0; a < d; ++a) out << ",x" << a;
  out << ",re_u,im_u";
  for (int a = 0; a < d; ++a) out << ",A" << a;
  out << "\n";

  std::vector<int> idx(d);
  std::vector<double> x(d);
  char buf[64];
  for (size_t i = 0; i < n; ++i) {
    config.lat.unravel(i, idx);
    config.lat.coords(idx, x);
    out << i;
    for (int a = 0; a < d; ++a) {
      std::snprintf(buf, sizeof(buf), ",%.17g", x[a]);
      out << buf;
    }
    std::snprintf(buf, sizeof(buf), ",%.17g,%.17g", config.u[i].real(), config.u[i].imag());
    out << buf;
    for (int a = 0; a < d; ++a) {
      std::snprintf(buf, sizeof(buf), ",%.17g", config.A[a * n + i]);
      out << buf;
    }
    out << "\n";
  }
}

}  // namespace vortexlab
