// Copyright 2026 The binloc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "binloc/rng.hpp"
#include "binloc/spatializer.hpp"
#include "test_util.hpp"

using namespace binloc;
using binloc::testing::TempDir;

namespace {

constexpr int kRate = 16000;

MonoSignal white_noise(std::size_t n, std::uint64_t seed) {
  MonoSignal s;
  s.sample_rate_hz = kRate;
  s.samples.resize(n);
  Rng rng(seed);
  for (double& v : s.samples) v = rng.normal();
  return s;
}

/// Brute-force broadband cross-correlation peak between the two ears.
int measured_itd_samples(const BinauralSignal& s, int max_lag = 40) {
  int best_lag = 0;
  double best = -1e300;
  for (int lag = -max_lag; lag <= max_lag; ++lag) {
    double acc = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const std::ptrdiff_t j = static_cast<std::ptrdiff_t>(i) + lag;
      if (j < 0 || j >= static_cast<std::ptrdiff_t>(s.size())) continue;
      acc += s.left.samples[i] * s.right.samples[j];
    }
    if (acc > best) {
      best = acc;
      best_lag = lag;
    }
  }
  return best_lag;
}

SphericalHeadParams symmetric_head() {
  SphericalHeadParams p;
  p.shadow_asymmetry = 0.0;
  return p;
}

}  // namespace

TEST_CASE("azimuth grid covers 360 degrees in 5 degree steps") {
  CHECK(AzimuthGrid::kCount * AzimuthGrid::kStepDeg == 360);
  CHECK(AzimuthGrid::values().size() == 72);
  CHECK(AzimuthGrid::index_of(355) == 71);
  CHECK(AzimuthGrid::snap(357.6) == 0);
  CHECK(AzimuthGrid::snap(-5.0) == 355);
  CHECK_THROWS_AS(AzimuthGrid::index_of(93.0), InvalidArgument);
}

TEST_CASE("woodworth geometry: symmetry and front-back pairs") {
  const SphericalHeadParams p = symmetric_head();
  CHECK(woodworth_itd_s(p, 0.0) == 0.0);
  CHECK(woodworth_itd_s(p, 180.0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(woodworth_itd_s(p, 90.0) == doctest::Approx(-woodworth_itd_s(p, 270.0)));
  // Front-back mirror pair shares the ITD (lateral angle identical).
  CHECK(woodworth_itd_s(p, 30.0) == doctest::Approx(woodworth_itd_s(p, 150.0)));
  // Full-lateral value: (a/c)(pi/2 + 1).
  CHECK(woodworth_itd_s(p, 90.0) ==
        doctest::Approx(p.head_radius_m / p.sound_speed_m_s * (kPi / 2.0 + 1.0)));
}

TEST_CASE("spatialize with a unit impulse reproduces the catalog IR pair") {
  const HrirCatalog catalog = generate_spherical_catalog(symmetric_head(), kRate);
  MonoSignal impulse;
  impulse.sample_rate_hz = kRate;
  impulse.samples.assign(64, 0.0);
  impulse.samples[0] = 1.0;
  const BinauralSignal out = spatialize(impulse, 45.0, catalog);
  const auto& ir = catalog.at(45.0);
  for (std::size_t i = 0; i < ir.first.samples.size(); ++i) {
    CHECK(out.left.samples[i] == doctest::Approx(ir.first.samples[i]).epsilon(1e-12));
    CHECK(out.right.samples[i] == doctest::Approx(ir.second.samples[i]).epsilon(1e-12));
  }
  CHECK(out.size() == impulse.samples.size() + ir.first.samples.size() - 1);
}

TEST_CASE("spherical catalog: frontal source is exactly symmetric, 90 leads left") {
  const HrirCatalog catalog = generate_spherical_catalog(symmetric_head(), kRate);
  const auto& front = catalog.at(0.0);
  REQUIRE(front.first.samples.size() == front.second.samples.size());
  for (std::size_t i = 0; i < front.first.samples.size(); ++i)
    CHECK(front.first.samples[i] == front.second.samples[i]);

  // Left-side source: left channel leads, ITD near +(a/c)(pi/2+1) seconds.
  const SphericalHeadParams p = symmetric_head();
  const BinauralSignal s = spatialize(white_noise(32000, 21), 90.0, catalog);
  const double expected_lag = woodworth_itd_s(p, 90.0) * kRate;  // ~10.5 samples
  CHECK(std::fabs(measured_itd_samples(s) - expected_lag) <= 1.0);
}

TEST_CASE("spherical catalog: measured ITD matches Woodworth within one sample everywhere") {
  for (double asym : {0.0, 0.3}) {
    SphericalHeadParams p = symmetric_head();
    p.shadow_asymmetry = asym;
    const HrirCatalog catalog = generate_spherical_catalog(p, kRate);
    const MonoSignal probe = white_noise(32000, 22);
    for (int az : AzimuthGrid::values()) {
      const BinauralSignal s = spatialize(probe, az, catalog);
      const double expected = woodworth_itd_s(p, az) * kRate;
      CHECK_MESSAGE(std::fabs(measured_itd_samples(s) - expected) <= 1.0,
                    "azimuth ", az, " asym ", asym);
    }
  }
}

TEST_CASE("spherical catalog: front-back pairs identical when asymmetry is zero") {
  const HrirCatalog sym = generate_spherical_catalog(symmetric_head(), kRate);
  const auto& at30 = sym.at(30.0);
  const auto& at150 = sym.at(150.0);
  for (std::size_t i = 0; i < at30.first.samples.size(); ++i) {
    CHECK(at30.first.samples[i] == at150.first.samples[i]);
    CHECK(at30.second.samples[i] == at150.second.samples[i]);
  }

  // With asymmetry the rear far ear is shelved down: pairs must differ.
  SphericalHeadParams p = symmetric_head();
  p.shadow_asymmetry = 0.3;
  const HrirCatalog asym = generate_spherical_catalog(p, kRate);
  double diff = 0.0;
  for (std::size_t i = 0; i < asym.at(30.0).second.samples.size(); ++i)
    diff += std::fabs(asym.at(30.0).second.samples[i] - asym.at(150.0).second.samples[i]);
  CHECK(diff > 1e-3);
}

TEST_CASE("mix_scene of one source equals spatialize") {
  const HrirCatalog catalog = generate_spherical_catalog(symmetric_head(), kRate);
  SceneSpec spec;
  SourceSpec src;
  src.generator = GeneratorSpec{"white_noise", 0.25, 5, 0.0};
  src.azimuth_deg = 40.0;
  spec.sources.push_back(src);

  const BinauralSignal mixed = mix_scene(spec, catalog);
  const BinauralSignal direct =
      spatialize(render_source(spec.sources[0], kRate), 40.0, catalog);
  REQUIRE(mixed.size() == direct.size());
  for (std::size_t i = 0; i < mixed.size(); ++i) {
    CHECK(mixed.left.samples[i] == direct.left.samples[i]);
    CHECK(mixed.right.samples[i] == direct.right.samples[i]);
  }
}

TEST_CASE("mirrored pair of identical sources makes left equal right") {
  const HrirCatalog catalog = generate_spherical_catalog(symmetric_head(), kRate);
  SceneSpec spec;
  SourceSpec a;
  a.generator = GeneratorSpec{"white_noise", 0.2, 9, 0.0};
  a.azimuth_deg = 30.0;
  SourceSpec b = a;  // same signal, mirrored position
  b.azimuth_deg = 330.0;
  spec.sources = {a, b};

  const BinauralSignal mixed = mix_scene(spec, catalog);
  for (std::size_t i = 0; i < mixed.size(); ++i)
    CHECK(mixed.left.samples[i] == doctest::Approx(mixed.right.samples[i]).epsilon(1e-12));
}

TEST_CASE("three-talker scene at -50/-30/15 degrees is a valid eval scene") {
  SceneSpec spec;
  for (double az : {-50.0, -30.0, 15.0}) {
    SourceSpec src;
    src.generator = GeneratorSpec{"white_noise", 0.2, 1, 0.0};
    src.azimuth_deg = az;
    spec.sources.push_back(src);
  }
  CHECK_NOTHROW(spec.validate_for_eval());

  spec.sources[1].azimuth_deg = -45.0;  // 5 degrees from -50: too close
  CHECK_THROWS_AS(spec.validate_for_eval(), InvalidArgument);
}

TEST_CASE("mix_scene is linear in its source list") {
  const HrirCatalog catalog = generate_spherical_catalog(symmetric_head(), kRate);
  SourceSpec a;
  a.generator = GeneratorSpec{"white_noise", 0.15, 31, 0.0};
  a.azimuth_deg = 20.0;
  SourceSpec b;
  b.generator = GeneratorSpec{"pink_noise", 0.15, 32, 0.0};
  b.azimuth_deg = 300.0;
  b.gain = 0.7;

  SceneSpec both;
  both.sources = {a, b};
  SceneSpec only_a;
  only_a.sources = {a};
  SceneSpec only_b;
  only_b.sources = {b};

  const BinauralSignal sum_separate = [&] {
    BinauralSignal ra = mix_scene(only_a, catalog);
    const BinauralSignal rb = mix_scene(only_b, catalog);
    for (std::size_t i = 0; i < ra.size(); ++i) {
      ra.left.samples[i] += rb.left.samples[i];
      ra.right.samples[i] += rb.right.samples[i];
    }
    return ra;
  }();
  const BinauralSignal mixed = mix_scene(both, catalog);
  REQUIRE(mixed.size() == sum_separate.size());
  for (std::size_t i = 0; i < mixed.size(); ++i) {
    CHECK(mixed.left.samples[i] == sum_separate.left.samples[i]);
    CHECK(mixed.right.samples[i] == sum_separate.right.samples[i]);
  }
}

TEST_CASE("diffuse noise is deterministic, long, and interaurally balanced") {
  const HrirCatalog catalog = generate_spherical_catalog(symmetric_head(), kRate);
  const BinauralSignal n1 = make_diffuse_noise(1.0, catalog, 77);
  const BinauralSignal n2 = make_diffuse_noise(1.0, catalog, 77);
  REQUIRE(n1.size() == n2.size());
  CHECK(n1.size() >= 16000);
  for (std::size_t i = 0; i < n1.size(); i += 997) {
    CHECK(n1.left.samples[i] == n2.left.samples[i]);
    CHECK(n1.right.samples[i] == n2.right.samples[i]);
  }

  // Long-run interaural level difference of the field: 0 dB within 0.5 dB.
  const BinauralSignal field = make_diffuse_noise(10.0, catalog, 78);
  double el = 0.0, er = 0.0;
  for (double v : field.left.samples) el += v * v;
  for (double v : field.right.samples) er += v * v;
  CHECK(std::fabs(10.0 * std::log10(el / er)) <= 0.5);
}

TEST_CASE("mix_scene reaches the requested diffuse-noise SNR") {
  const HrirCatalog catalog = generate_spherical_catalog(symmetric_head(), kRate);
  SceneSpec spec;
  SourceSpec src;
  src.generator = GeneratorSpec{"white_noise", 0.5, 13, 0.0};
  src.azimuth_deg = 0.0;
  spec.sources.push_back(src);
  spec.seed = 5;
  spec.diffuse_noise = DiffuseNoiseSpec{10.0};

  const BinauralSignal clean = [&] {
    SceneSpec no_noise = spec;
    no_noise.diffuse_noise.reset();
    return mix_scene(no_noise, catalog);
  }();
  const BinauralSignal noisy = mix_scene(spec, catalog);

  double e_dir = 0.0, e_noise = 0.0;
  for (std::size_t i = 0; i < noisy.size(); ++i) {
    e_dir += clean.left.samples[i] * clean.left.samples[i] +
             clean.right.samples[i] * clean.right.samples[i];
    const double nl = noisy.left.samples[i] - clean.left.samples[i];
    const double nr = noisy.right.samples[i] - clean.right.samples[i];
    e_noise += nl * nl + nr * nr;
  }
  CHECK(10.0 * std::log10(e_dir / e_noise) == doctest::Approx(10.0).epsilon(1e-6));
}

TEST_CASE("rotate_head keeps world positions and remaps head-relative azimuths") {
  SceneSpec spec;
  SourceSpec src;
  src.generator = GeneratorSpec{"white_noise", 0.1, 3, 0.0};
  src.azimuth_deg = 60.0;
  spec.sources.push_back(src);

  const SceneSpec turned = rotate_head(spec, 30.0);
  CHECK(turned.head_orientation_deg == 30.0);
  CHECK(turned.sources[0].azimuth_deg == 60.0);  // world frame untouched
  CHECK(head_relative_azimuth(60.0, turned.head_orientation_deg) == 30);

  const SceneSpec same = rotate_head(spec, 0.0);
  CHECK(same.head_orientation_deg == spec.head_orientation_deg);

  // Wraparound: source at 355, head turned -10 -> head-relative 5.
  CHECK(head_relative_azimuth(355.0, -10.0) == 5);

  CHECK_THROWS_AS(rotate_head(spec, 35.0), InvalidArgument);
  CHECK_THROWS_AS(rotate_head(spec, -31.0), InvalidArgument);

  // Inverse rotation restores every head-relative azimuth.
  for (double d : {-30.0, -15.0, 5.0, 25.0}) {
    const SceneSpec there = rotate_head(spec, d);
    const SceneSpec back = rotate_head(there, -d);
    CHECK(head_relative_azimuth(src.azimuth_deg, back.head_orientation_deg) ==
          head_relative_azimuth(src.azimuth_deg, spec.head_orientation_deg));
  }
}

TEST_CASE("compensate_levels normalizes averaged peaks to one") {
  HrirCatalog catalog = generate_spherical_catalog(symmetric_head(), kRate);
  // Distort one entry to half amplitude.
  for (double& v : catalog.entries.at(50).first.samples) v *= 0.5;
  for (double& v : catalog.entries.at(50).second.samples) v *= 0.5;

  const HrirCatalog fixed = compensate_levels(catalog);
  for (const auto& [az, pair] : fixed.entries) {
    double pl = 0.0, pr = 0.0;
    for (double v : pair.first.samples) pl = std::max(pl, std::fabs(v));
    for (double v : pair.second.samples) pr = std::max(pr, std::fabs(v));
    CHECK(0.5 * (pl + pr) == doctest::Approx(1.0).epsilon(1e-9));
  }

  // Idempotence: an already-compensated catalog is unchanged.
  const HrirCatalog again = compensate_levels(fixed);
  const auto& a = fixed.entries.at(100);
  const auto& b = again.entries.at(100);
  for (std::size_t i = 0; i < a.first.samples.size(); ++i)
    CHECK(a.first.samples[i] == doctest::Approx(b.first.samples[i]).epsilon(1e-12));
}

TEST_CASE("catalog round-trips through the manifest directory format") {
  TempDir dir("catalog");
  const HrirCatalog catalog =
      compensate_levels(generate_spherical_catalog(symmetric_head(), kRate));
  save_catalog(catalog, dir.str());
  const HrirCatalog loaded = load_catalog(dir.str(), kRate);
  REQUIRE(loaded.entries.size() == 72);
  const auto& a = catalog.at(65.0);
  const auto& b = loaded.at(65.0);
  REQUIRE(a.first.samples.size() == b.first.samples.size());
  for (std::size_t i = 0; i < a.first.samples.size(); ++i) {
    // float32 WAV storage quantizes to float precision
    CHECK(b.first.samples[i] == doctest::Approx(a.first.samples[i]).epsilon(1e-6));
  }
}

TEST_CASE("missing catalog entries are an explicit error") {
  HrirCatalog catalog = generate_spherical_catalog(symmetric_head(), kRate);
  catalog.entries.erase(45);
  CHECK_THROWS_AS((void)catalog.at(45.0), InvalidArgument);
  CHECK_THROWS_AS((void)catalog.at(43.0), InvalidArgument);  // off-grid: no silent snapping
  CHECK_FALSE(catalog.covers_grid());
  CHECK_THROWS_AS((void)make_diffuse_noise(0.1, catalog, 1), InvalidArgument);
}

TEST_CASE("scene specs round-trip through JSON") {
  SceneSpec spec;
  SourceSpec src;
  src.generator = GeneratorSpec{"harmonic", 0.5, 42, 180.0};
  src.azimuth_deg = 125.0;
  src.gain = 0.8;
  spec.sources.push_back(src);
  spec.head_orientation_deg = 10.0;
  spec.catalog_ref = "catalogs/head";
  spec.diffuse_noise = DiffuseNoiseSpec{0.0};
  spec.seed = 99;

  spec.sources[0].normalize_rms = 0.1;
  const SceneSpec back = scene_from_json(scene_to_json(spec));
  CHECK(back.sources.size() == 1);
  CHECK(back.sources[0].generator->type == "harmonic");
  CHECK(back.sources[0].generator->f0_hz == 180.0);
  CHECK(back.sources[0].azimuth_deg == 125.0);
  CHECK(back.sources[0].gain == 0.8);
  REQUIRE(back.sources[0].normalize_rms.has_value());
  CHECK(*back.sources[0].normalize_rms == 0.1);
  CHECK(back.head_orientation_deg == 10.0);
  CHECK(back.catalog_ref == "catalogs/head");
  REQUIRE(back.diffuse_noise.has_value());
  CHECK(back.diffuse_noise->snr_db == 0.0);
  CHECK(back.seed == 99);
}
