#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "test_util.hpp"
#include "vortexlab/io.hpp"

using namespace vortexlab;

TEST_CASE("snapshot: bit-exact round trip, 2D and cylinder") {
  for (int variant : {0, 1}) {
    Lattice lat;
    if (variant == 0) {
      lat = Lattice::from(Grid2::from_nodes(3.0, 21));
    } else {
      lat = Lattice::from(GridN::make(1, 2.0, 9, Grid2::from_nodes(1.5, 11)));
    }
    FieldConfiguration w = FieldConfiguration::zeros(lat, 0.25);
    const Perturbation p = testutil::random_perturbation(lat, 5 + variant, 4, 0.4);
    for (size_t i = 0; i < w.size(); ++i) {
      w.u[i] = p.phi[i];
      for (int c = 0; c < lat.dim(); ++c) w.A[c * w.size() + i] = p.omega[c * w.size() + i];
    }
    const std::string path = "snapshot_test.bin";
    write_snapshot(w, path);
    const FieldConfiguration r = read_snapshot(path);
    REQUIRE(r.lat.same_layout(lat));
    CHECK(r.epsilon == w.epsilon);
    bool exact = true;
    for (size_t i = 0; i < w.size(); ++i)
      if (r.u[i] != w.u[i]) exact = false;
    for (size_t i = 0; i < w.A.size(); ++i)
      if (r.A[i] != w.A[i]) exact = false;
    CHECK(exact);
    std::remove(path.c_str());
  }
}

TEST_CASE("snapshot: corrupted header is rejected") {
  const Lattice lat = Lattice::from(Grid2::from_nodes(1.0, 5));
  write_snapshot(FieldConfiguration::vacuum(lat, 1.0), "snapshot_bad.bin");
  {
    std::fstream f("snapshot_bad.bin",
                   std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(0);
    const uint64_t bogus = ~0ull;
    f.write(reinterpret_cast<const char*>(&bogus), sizeof(bogus));
  }
  CHECK_THROWS_AS(read_snapshot("snapshot_bad.bin"), ValidationError);
  std::remove("snapshot_bad.bin");
}

TEST_CASE("field CSV export and size guard") {
  const Lattice lat = Lattice::from(Grid2::from_nodes(1.0, 5));
  const FieldConfiguration w = FieldConfiguration::vacuum(lat, 1.0);
  write_field_csv(w, "field_test.csv");
  std::ifstream in("field_test.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "index,x0,x1,re_u,im_u,A0,A1");
  size_t rows = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == w.size());
  std::remove("field_test.csv");

  CHECK_THROWS_AS(write_field_csv(w, "field_test.csv", 3), ValidationError);
}
