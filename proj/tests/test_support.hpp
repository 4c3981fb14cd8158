#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "coms/nnet.hpp"
#include "coms/vec2.hpp"

namespace coms::testing {

/// f(x) = -scale * ||x - center||^2.
struct QuadraticField {
    Vec2 center{};
    double scale = 1.0;

    double value(const Vec2& x) const {
        const Vec2 d = x - center;
        return -scale * dot(d, d);
    }
    Vec2 gradient(const Vec2& x) const { return -2.0 * scale * (x - center); }
};

struct ConstantField {
    double c = 0.0;
    double value(const Vec2&) const { return c; }
    Vec2 gradient(const Vec2&) const { return {}; }
};

/// Central finite-difference gradient of `field.value` with step h.
template <class Field>
Vec2 fd_input_gradient(const Field& field, const Vec2& x, double h = 1e-5) {
    const double gx = (field.value(Vec2{x.x + h, x.y}) - field.value(Vec2{x.x - h, x.y})) / (2 * h);
    const double gy = (field.value(Vec2{x.x, x.y + h}) - field.value(Vec2{x.x, x.y - h})) / (2 * h);
    return {gx, gy};
}

/// Central finite differences of a scalar function of the flat parameters.
template <class Loss>
std::vector<double> fd_param_gradient(MlpField field, Loss&& loss, double h = 1e-5) {
    std::vector<double> out(field.size());
    auto theta = field.values();
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double saved = theta[i];
        theta[i] = saved + h;
        const double up = loss(field);
        theta[i] = saved - h;
        const double down = loss(field);
        theta[i] = saved;
        out[i] = (up - down) / (2 * h);
    }
    return out;
}

/// Largest per-entry relative error. Entries are compared against
/// max(|a|, |b|, floor_frac * max-abs entry), so components that are
/// negligible relative to the whole gradient are not judged on their own.
inline double max_relative_error(const std::vector<double>& a, const std::vector<double>& b, double floor_frac = 1e-3) {
    double scale = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) scale = std::max({scale, std::abs(a[i]), std::abs(b[i])});
    const double floor = std::max(floor_frac * scale, 1e-12);
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double denom = std::max({std::abs(a[i]), std::abs(b[i]), floor});
        worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
    }
    return worst;
}

/// Scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        path_ = std::filesystem::temp_directory_path() /
                ("coms_" + tag + "_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace coms::testing
