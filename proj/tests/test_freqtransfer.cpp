#include <doctest.h>

#include "oracles.hpp"
#include "uda/freqtransfer.hpp"

using namespace uda;
using freqtransfer::DifSet;

TEST_CASE("default DIF set") {
  CHECK(freqtransfer::default_dif() == ComponentSet::parse("0,7-14"));
}

TEST_CASE("stack swap identities") {
  Rng rng(1);
  FcStack a, b;
  for (int k = 0; k < kComponentCount; ++k) {
    a[k] = oracle::random_image(rng, 4, 4);
    b[k] = oracle::random_image(rng, 4, 4);
  }
  const auto all = freqtransfer::transfer_stack(a, b, ComponentSet::all());
  const auto none = freqtransfer::transfer_stack(a, b, ComponentSet::none());
  const auto dif = freqtransfer::default_dif();
  const auto once = freqtransfer::transfer_stack(a, b, dif);
  const auto twice = freqtransfer::transfer_stack(once, b, dif);
  for (int k = 0; k < kComponentCount; ++k) {
    CHECK(all[k].values() == a[k].values());
    CHECK(none[k].values() == b[k].values());
    CHECK(twice[k].values() == once[k].values());
    CHECK(once[k].values() == (dif.contains(k) ? a[k] : b[k]).values());
  }
  FcStack bad = b;
  bad[3] = Image2D(4, 5);
  CHECK_THROWS_AS(freqtransfer::transfer_stack(a, bad, dif), Error);
}

TEST_CASE("image transfer identities") {
  Rng rng(2);
  const Image2D s = oracle::random_image(rng, 16, 16), t = oracle::random_image(rng, 16, 16);
  CHECK(max_abs_diff(freqtransfer::freq_transfer_image(s, t, ComponentSet::all()), s) < 1e-9);
  CHECK(max_abs_diff(freqtransfer::freq_transfer_image(s, t, ComponentSet::none()), t) < 1e-9);
  CHECK(max_abs_diff(freqtransfer::freq_transfer_image(s, s, freqtransfer::default_dif()), s) < 1e-9);
  const Image2D c = freqtransfer::freq_transfer_image(Image2D(16, 16, 10.0), Image2D(16, 16, 20.0),
                                                     freqtransfer::default_dif());
  CHECK(max_abs_diff(c, Image2D(16, 16, 10.0)) < 1e-9);
  CHECK_THROWS_AS(freqtransfer::freq_transfer_image(s, Image2D(16, 17), ComponentSet::all()), Error);
}

TEST_CASE("complementarity of DIF and DVF swaps") {
  Rng rng(3);
  const Image2D s = oracle::random_image(rng, 16, 16), t = oracle::random_image(rng, 16, 16);
  for (const auto& d : {freqtransfer::default_dif(), ComponentSet{1, 2, 5}, ComponentSet{0}}) {
    const Image2D sum = freqtransfer::freq_transfer_image(s, t, d) +
                        freqtransfer::freq_transfer_image(s, t, d.complement());
    CHECK(max_abs_diff(sum, s + t) < 1e-9);
  }
}

TEST_CASE("spectral filter equals the component swap") {
  Rng rng(4);
  const nsct::NsctPlan plan(16, 24);
  for (const auto& d : {freqtransfer::default_dif(), ComponentSet{3, 9}, ComponentSet::all(),
                        ComponentSet::none()}) {
    const Image2D s = oracle::random_image(rng, 16, 24), t = oracle::random_image(rng, 16, 24);
    const freqtransfer::TransferFilter filter(plan, d);
    CHECK(max_abs_diff(filter.apply(s, t), freqtransfer::freq_transfer_image(plan, s, t, d)) < 1e-9);
  }
  const freqtransfer::TransferFilter filter(plan, ComponentSet::all());
  CHECK_THROWS_AS(filter.apply(Image2D(16, 16), Image2D(16, 16)), Error);
}
