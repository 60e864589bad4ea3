#include <catch2/catch.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "iidm/image.hpp"
#include "iidm/latent.hpp"
#include "iidm/metrics.hpp"
#include "iidm/rng.hpp"

using namespace iidm;

namespace {

RgbImage random_image(std::uint64_t seed, int w, int h, double lo = 0.0,
                      double hi = 1.0) {
    RgbImage img(w, h);
    Rng rng(seed);
    for (auto& p : img.pixels) p = lo + (hi - lo) * rng.uniform();
    return img;
}

double max_abs_diff(const RgbImage& a, const RgbImage& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i)
        m = std::max(m, std::abs(a.pixels[i] - b.pixels[i]));
    return m;
}

} // namespace

TEST_CASE("lab round trip on the gamut interior") {
    RgbImage img = random_image(3, 13, 9, 0.005, 0.995);
    RgbImage back = lab_to_rgb(rgb_to_lab(img));
    REQUIRE(max_abs_diff(img, back) < 1e-4);
}

TEST_CASE("gray pixels sit near the achromatic axis") {
    // Reinhard's printed RGB->LMS rows sum to 0.9996/0.9993/0.9973 rather
    // than exactly 1, so gray maps a few 1e-4 off the axis, not to zero.
    RgbImage img(4, 1);
    for (int x = 0; x < 4; ++x)
        for (int c = 0; c < 3; ++c) img.at(x, 0, c) = 0.2 + 0.2 * x;
    LabImage lab = rgb_to_lab(img);
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        REQUIRE(std::abs(lab.values[i * 3 + 1]) < 1e-2); // alpha
        REQUIRE(std::abs(lab.values[i * 3 + 2]) < 1e-2); // beta
    }
}

TEST_CASE("black pixels pass through the log guard") {
    RgbImage img(2, 1, 0.0);
    img.at(1, 0, 0) = 1.0;
    LabImage lab = rgb_to_lab(img);
    for (double v : lab.values) REQUIRE(std::isfinite(v));
    RgbImage back = lab_to_rgb(lab);
    for (double v : back.pixels) {
        REQUIRE(v >= 0.0);
        REQUIRE(v <= 1.0);
    }
}

TEST_CASE("color transfer") {
    SECTION("self-transfer is the identity within round-trip tolerance") {
        RgbImage img = random_image(5, 12, 8, 0.005, 0.995);
        RgbImage out = color_transfer(img, img);
        REQUIRE(max_abs_diff(img, out) < 1e-4);
    }
    SECTION("pre-clamp lab moments match the reference") {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            RgbImage src = random_image(100 + seed, 17, 13);
            RgbImage ref = random_image(200 + seed, 8, 21); // sizes may differ
            LabImage out = color_transfer_lab(src, ref);
            ChannelStats os = lab_stats(out);
            ChannelStats rs = lab_stats(rgb_to_lab(ref));
            for (int c = 0; c < 3; ++c) {
                REQUIRE(os.mean[c] == Approx(rs.mean[c]).margin(1e-6));
                REQUIRE(os.stddev[c] == Approx(rs.stddev[c]).margin(1e-6));
            }
        }
    }
    SECTION("constant source collapses to the reference channel means") {
        RgbImage src(6, 6, 0.42);
        RgbImage ref = random_image(7, 9, 9);
        LabImage out = color_transfer_lab(src, ref);
        ChannelStats rs = lab_stats(rgb_to_lab(ref));
        for (std::size_t i = 0; i < out.values.size() / 3; ++i)
            for (int c = 0; c < 3; ++c)
                REQUIRE(out.values[i * 3 + c] == rs.mean[c]);
        RgbImage rgb = color_transfer(src, ref);
        for (std::size_t i = 0; i < rgb.pixels.size(); ++i)
            REQUIRE(rgb.pixels[i] == rgb.pixels[i % 3]); // constant image
    }
    SECTION("transfer is idempotent on statistics") {
        // ranges chosen so the transferred image stays inside the gamut and
        // clamping cannot disturb the second pass
        RgbImage src = random_image(8, 10, 10, 0.3, 0.7);
        RgbImage ref = random_image(9, 10, 10, 0.4, 0.6);
        RgbImage once = color_transfer(src, ref);
        RgbImage twice = color_transfer(once, ref);
        REQUIRE(max_abs_diff(once, twice) < 1e-4);
    }
}

TEST_CASE("channel histograms") {
    SECTION("constant image concentrates in one bin per channel") {
        RgbImage img(4, 4, 0.5);
        auto h = channel_histogram(img, 8);
        for (int c = 0; c < 3; ++c) {
            for (int b = 0; b < 8; ++b)
                REQUIRE(h[c * 8 + b] == (b == 4 ? 1.0 : 0.0));
        }
    }
    SECTION("each channel block sums to one") {
        RgbImage img = random_image(11, 9, 7);
        auto h = channel_histogram(img, 16);
        for (int c = 0; c < 3; ++c) {
            double sum = 0.0;
            for (int b = 0; b < 16; ++b) sum += h[c * 16 + b];
            REQUIRE(sum == Approx(1.0).epsilon(1e-12));
        }
    }
    SECTION("boundary values: 1.0 lands in the last bin") {
        RgbImage img(2, 1);
        for (int c = 0; c < 3; ++c) {
            img.at(0, 0, c) = 0.0;
            img.at(1, 0, c) = 1.0;
        }
        auto h = channel_histogram(img, 2);
        for (int c = 0; c < 3; ++c) {
            REQUIRE(h[c * 2] == 0.5);
            REQUIRE(h[c * 2 + 1] == 0.5);
        }
    }
    SECTION("invariant under pixel permutation") {
        RgbImage img = random_image(12, 6, 6);
        RgbImage shuffled = img;
        Rng rng(13);
        for (std::size_t i = shuffled.pixel_count() - 1; i > 0; --i) {
            auto j = static_cast<std::size_t>(rng.next_u64() % (i + 1));
            for (int c = 0; c < 3; ++c)
                std::swap(shuffled.pixels[i * 3 + c], shuffled.pixels[j * 3 + c]);
        }
        REQUIRE(channel_histogram(img, 32) == channel_histogram(shuffled, 32));
    }
    SECTION("bins precondition") {
        CHECK_THROWS_AS(channel_histogram(RgbImage(2, 2), 1), std::invalid_argument);
    }
}

TEST_CASE("style similarity") {
    SECTION("an image against itself scores 100") {
        RgbImage img = random_image(21, 12, 12);
        REQUIRE(style_similarity(img, img) == 100.0);
    }
    SECTION("black vs white with two bins scores 0") {
        RgbImage black(4, 4, 0.0), white(4, 4, 1.0);
        REQUIRE(style_similarity(black, white, 2) == 0.0);
    }
    SECTION("matches an independent Pearson evaluation") {
        RgbImage a = random_image(22, 10, 14);
        RgbImage b = random_image(23, 10, 14);
        int bins = 32;
        auto ha = channel_histogram(a, bins);
        auto hb = channel_histogram(b, bins);
        double n = static_cast<double>(ha.size());
        double ma = 0, mb = 0;
        for (std::size_t i = 0; i < ha.size(); ++i) {
            ma += ha[i];
            mb += hb[i];
        }
        ma /= n;
        mb /= n;
        double saa = 0, sbb = 0, sab = 0;
        for (std::size_t i = 0; i < ha.size(); ++i) {
            saa += (ha[i] - ma) * (ha[i] - ma);
            sbb += (hb[i] - mb) * (hb[i] - mb);
            sab += (ha[i] - ma) * (hb[i] - mb);
        }
        double expected = 100.0 * std::max(sab / std::sqrt(saa * sbb), 0.0);
        REQUIRE(style_similarity(a, b, bins) == Approx(expected).epsilon(1e-12));
    }
    SECTION("zero-variance histograms: 100 when equal, else 0") {
        // two-pixel {0, 1} images have uniform two-bin histograms -> the
        // concatenated vector is constant
        RgbImage a(2, 1), b(2, 1), c(2, 1, 0.0);
        for (int ch = 0; ch < 3; ++ch) {
            a.at(0, 0, ch) = 0.0;
            a.at(1, 0, ch) = 1.0;
            b.at(0, 0, ch) = 1.0;
            b.at(1, 0, ch) = 0.0;
        }
        REQUIRE(style_similarity(a, b, 2) == 100.0);
        REQUIRE(style_similarity(a, c, 2) == 0.0);
    }
    SECTION("invariant under a shared pixel permutation") {
        RgbImage a = random_image(24, 8, 8);
        RgbImage b = random_image(25, 8, 8);
        double before = style_similarity(a, b, 16);
        // reverse both pixel orders
        RgbImage ar = a, br = b;
        std::reverse(ar.pixels.begin(), ar.pixels.end());
        std::reverse(br.pixels.begin(), br.pixels.end());
        REQUIRE(style_similarity(ar, br, 16) == before);
    }
}

TEST_CASE("gaussian fit") {
    std::vector<std::vector<double>> pts = {{0, 0}, {2, 0}, {0, 2}, {2, 2}};
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    gaussian_fit(pts, mean, cov);
    REQUIRE(mean(0) == Approx(1.0));
    REQUIRE(mean(1) == Approx(1.0));
    REQUIRE(cov(0, 0) == Approx(4.0 / 3.0)); // unbiased, n - 1
    REQUIRE(cov(1, 1) == Approx(4.0 / 3.0));
    REQUIRE(cov(0, 1) == Approx(0.0).margin(1e-15));
    CHECK_THROWS_AS(gaussian_fit({{1.0, 2.0}}, mean, cov), std::invalid_argument);
}

TEST_CASE("frechet distance") {
    auto mat1 = [](double v) {
        Eigen::MatrixXd m(1, 1);
        m(0, 0) = v;
        return m;
    };
    auto vec1 = [](double v) {
        Eigen::VectorXd x(1);
        x(0) = v;
        return x;
    };

    SECTION("identical gaussians are at distance zero") {
        Rng rng(31);
        Eigen::VectorXd m(4);
        Eigen::MatrixXd a(4, 4);
        for (int i = 0; i < 4; ++i) {
            m(i) = rng.normal();
            for (int j = 0; j < 4; ++j) a(i, j) = rng.normal();
        }
        Eigen::MatrixXd c = a * a.transpose();
        REQUIRE(frechet_distance(m, c, m, c) == Approx(0.0).margin(1e-9));
    }
    SECTION("one-dimensional closed forms") {
        REQUIRE(frechet_distance(vec1(0), mat1(1), vec1(1), mat1(1)) == Approx(1.0));
        REQUIRE(frechet_distance(vec1(0), mat1(1), vec1(0), mat1(4)) == Approx(1.0));
    }
    SECTION("symmetric in its arguments") {
        Rng rng(32);
        for (int trial = 0; trial < 4; ++trial) {
            Eigen::VectorXd m1(3), m2(3);
            Eigen::MatrixXd a1(3, 3), a2(3, 3);
            for (int i = 0; i < 3; ++i) {
                m1(i) = rng.normal();
                m2(i) = rng.normal();
                for (int j = 0; j < 3; ++j) {
                    a1(i, j) = rng.normal();
                    a2(i, j) = rng.normal();
                }
            }
            Eigen::MatrixXd c1 = a1 * a1.transpose();
            Eigen::MatrixXd c2 = a2 * a2.transpose();
            double d12 = frechet_distance(m1, c1, m2, c2);
            double d21 = frechet_distance(m2, c2, m1, c1);
            REQUIRE(d12 == Approx(d21).epsilon(1e-9));
            REQUIRE(d12 >= 0.0);
        }
    }
    SECTION("dimension mismatch") {
        CHECK_THROWS_AS(frechet_distance(vec1(0), mat1(1), Eigen::VectorXd(2),
                                         Eigen::MatrixXd::Identity(2, 2)),
                        std::invalid_argument);
    }
}

TEST_CASE("total score") {
    SECTION("zero mask accuracy gates everything to zero") {
        REQUIRE(total_score(0.0, 70.0, 10.0, 90.0) == 0.0);
    }
    SECTION("monotone in each component") {
        Rng rng(41);
        for (int i = 0; i < 20; ++i) {
            double m = 40 + 60 * rng.uniform();
            double a = 100 * rng.uniform();
            double fid = 80 * rng.uniform();
            double s = 100 * rng.uniform();
            double base = total_score(m, a, fid, s);
            REQUIRE(total_score(m + 1, a, fid, s) > base);
            REQUIRE(total_score(m, a + 1, fid, s) > base);
            REQUIRE(total_score(m, a, fid + 1, s) < base);
            REQUIRE(total_score(m, a, fid, s + 1) > base);
        }
    }
    SECTION("report consistency check") {
        ScoreReport r{91.01, 49.12, 35.41, 27.90, 0.0};
        r.total = total_score(r.mask_accuracy, r.aesthetic, r.fid, r.style_similarity);
        REQUIRE(report_consistent(r));
        r.total += 1e-6;
        REQUIRE_FALSE(report_consistent(r));
    }
}

TEST_CASE("identity codec") {
    RgbImage img = random_image(51, 6, 4);
    Codec codec = Codec::identity();
    Latent z = encode(codec, img);
    SECTION("latent equals the image values") {
        REQUIRE(z.channels == 3);
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x)
                for (int c = 0; c < 3; ++c) REQUIRE(z.at(c, y, x) == img.at(x, y, c));
    }
    SECTION("round trip is bit-identical") {
        RgbImage back = decode(codec, z);
        REQUIRE(back.pixels == img.pixels);
    }
}

TEST_CASE("linear-patch codec") {
    SECTION("identity projection reshapes patches") {
        int dim = 12;
        std::vector<double> eye(static_cast<std::size_t>(dim) * dim, 0.0);
        for (int i = 0; i < dim; ++i) eye[static_cast<std::size_t>(i) * dim + i] = 1.0;
        Codec codec = Codec::with_projection(eye);
        RgbImage img = random_image(52, 4, 4);
        Latent z = encode(codec, img);
        REQUIRE(z.channels == 12);
        REQUIRE(z.height == 2);
        REQUIRE(z.width == 2);
        // channel-major patch flattening: entry (c, dy, dx)
        REQUIRE(z.at(0, 0, 0) == img.at(0, 0, 0));
        REQUIRE(z.at(1, 0, 0) == img.at(1, 0, 0));
        REQUIRE(z.at(2, 0, 0) == img.at(0, 1, 0));
        REQUIRE(z.at(4, 1, 1) == img.at(2, 2, 1));
    }
    SECTION("orthogonal round trip stays within tolerance") {
        Codec codec = Codec::linear_patch(1234);
        RgbImage img = random_image(53, 8, 6);
        RgbImage back = decode(codec, encode(codec, img));
        REQUIRE(max_abs_diff(img, back) < 1e-6);
    }
    SECTION("encode is deterministic for fixed parameters") {
        Codec codec = Codec::linear_patch(99);
        RgbImage img = random_image(54, 4, 4);
        REQUIRE(encode(codec, img).values == encode(codec, img).values);
    }
    SECTION("dimension mismatch is rejected") {
        Codec codec = Codec::linear_patch(7);
        CHECK_THROWS_AS(encode(codec, RgbImage(5, 4)), std::invalid_argument);
        CHECK_THROWS_AS(decode(codec, Latent(3, 2, 2)), std::invalid_argument);
    }
}

TEST_CASE("pixel/signal affine map") {
    REQUIRE(pixel_to_signal(0.0) == -1.0);
    REQUIRE(pixel_to_signal(1.0) == 1.0);
    REQUIRE(signal_to_pixel(0.0) == 0.5);
    Rng rng(61);
    for (int i = 0; i < 100; ++i) {
        double p = rng.uniform();
        REQUIRE(signal_to_pixel(pixel_to_signal(p)) == Approx(p).margin(1e-15));
    }
}
