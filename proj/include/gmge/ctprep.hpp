#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gmge/errors.hpp"

namespace gmge {

// A 3-D scalar field in Hounsfield units (or normalized intensity after
// preprocessing). Axial slices stack along z, x fastest in memory.
// head_to_feet: +z runs from the head toward the feet, so the nose
// landmark has the smaller slice index than the acromion.
struct CTVolume {
    int w = 0, h = 0, d = 0;
    std::vector<float> voxels;
    std::array<float, 3> spacing{1.f, 1.f, 1.f};  // (sx, sy, sz) mm
    std::optional<int> nose_slice, acromion_slice;
    bool head_to_feet = true;

    CTVolume() = default;
    CTVolume(int w_, int h_, int d_, float fill = 0.f,
             std::array<float, 3> spacing_ = {1.f, 1.f, 1.f})
        : w(w_), h(h_), d(d_), spacing(spacing_) {
        if (w <= 0 || h <= 0 || d <= 0)
            throw DimError("CTVolume extents must be positive");
        if (spacing[0] <= 0 || spacing[1] <= 0 || spacing[2] <= 0)
            throw ValueError("CTVolume spacing components must be positive");
        voxels.assign(static_cast<std::size_t>(w) * h * d, fill);
    }

    std::size_t size() const { return voxels.size(); }
    std::size_t index(int x, int y, int z) const {
        return (static_cast<std::size_t>(z) * h + y) * w + x;
    }
    float& at(int x, int y, int z) { return voxels[index(x, y, z)]; }
    float at(int x, int y, int z) const { return voxels[index(x, y, z)]; }

    void check_landmarks() const {
        if (!nose_slice || !acromion_slice) return;
        if (*nose_slice < 0 || *nose_slice >= d || *acromion_slice < 0 || *acromion_slice >= d)
            throw ValueError("landmark slice outside volume");
        const bool nose_first = *nose_slice < *acromion_slice;
        if (nose_first != head_to_feet)
            throw ValueError("nose landmark must lie on the head side of the acromion");
    }
};

namespace detail {

// Trilinear sample at fractional voxel coordinates with border clamp.
// Nested lerps keep constant fields bit-exact and integer coordinates
// exact reads.
inline float lerp(float a, float b, float f) { return a + f * (b - a); }

inline float trilinear_at(const std::vector<float>& v, int w, int h, int d, double fx, double fy,
                          double fz) {
    fx = std::clamp(fx, 0.0, static_cast<double>(w - 1));
    fy = std::clamp(fy, 0.0, static_cast<double>(h - 1));
    fz = std::clamp(fz, 0.0, static_cast<double>(d - 1));
    const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy), z0 = static_cast<int>(fz);
    const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1),
              z1 = std::min(z0 + 1, d - 1);
    const float tx = static_cast<float>(fx - x0), ty = static_cast<float>(fy - y0),
                tz = static_cast<float>(fz - z0);
    auto at = [&](int x, int y, int z) {
        return v[(static_cast<std::size_t>(z) * h + y) * w + x];
    };
    const float c00 = lerp(at(x0, y0, z0), at(x1, y0, z0), tx);
    const float c10 = lerp(at(x0, y1, z0), at(x1, y1, z0), tx);
    const float c01 = lerp(at(x0, y0, z1), at(x1, y0, z1), tx);
    const float c11 = lerp(at(x0, y1, z1), at(x1, y1, z1), tx);
    return lerp(lerp(c00, c10, ty), lerp(c01, c11, ty), tz);
}

}  // namespace detail

// v <- (clamp(v, lo, hi) - lo) / (hi - lo), mapping the HU window onto [0,1].
inline CTVolume clip_and_normalize(const CTVolume& vol, float lo = -400.f, float hi = 400.f) {
    if (!(lo < hi)) throw ValueError("clip_and_normalize: window low must be below high");
    CTVolume out = vol;
    const float inv = 1.f / (hi - lo);
    for (float& v : out.voxels) v = (std::clamp(v, lo, hi) - lo) * inv;
    return out;
}

// Trilinear resample to isotropic voxels of `target_spacing` mm, voxel-center
// aligned; the new extent per axis is round(extent * spacing / target), so
// the physical field of view is preserved within one voxel.
inline CTVolume resample_isotropic(const CTVolume& vol, float target_spacing = 1.f) {
    if (!(target_spacing > 0)) throw ValueError("resample_isotropic: target spacing must be > 0");
    if (vol.w < 2 || vol.h < 2 || vol.d < 2)
        throw ValueError("resample_isotropic: degenerate single-voxel axis " +
                         std::to_string(vol.w) + "x" + std::to_string(vol.h) + "x" +
                         std::to_string(vol.d));
    const int nw = static_cast<int>(std::llround(vol.w * vol.spacing[0] / target_spacing));
    const int nh = static_cast<int>(std::llround(vol.h * vol.spacing[1] / target_spacing));
    const int nd = static_cast<int>(std::llround(vol.d * vol.spacing[2] / target_spacing));
    if (nw < 2 || nh < 2 || nd < 2)
        throw ValueError("resample_isotropic: output collapses below two voxels per axis");

    CTVolume out(nw, nh, nd, 0.f, {target_spacing, target_spacing, target_spacing});
    out.head_to_feet = vol.head_to_feet;
    const double rx = static_cast<double>(target_spacing) / vol.spacing[0];
    const double ry = static_cast<double>(target_spacing) / vol.spacing[1];
    const double rz = static_cast<double>(target_spacing) / vol.spacing[2];
    for (int z = 0; z < nd; ++z)
        for (int y = 0; y < nh; ++y)
            for (int x = 0; x < nw; ++x)
                out.at(x, y, z) = detail::trilinear_at(
                    vol.voxels, vol.w, vol.h, vol.d, (x + 0.5) * rx - 0.5, (y + 0.5) * ry - 0.5,
                    (z + 0.5) * rz - 0.5);
    auto map_z = [&](int z) {
        const int m = static_cast<int>(std::llround((z + 0.5) / rz - 0.5));
        return std::clamp(m, 0, nd - 1);
    };
    if (vol.nose_slice) out.nose_slice = map_z(*vol.nose_slice);
    if (vol.acromion_slice) out.acromion_slice = map_z(*vol.acromion_slice);
    out.check_landmarks();
    return out;
}

// Keeps the axial slab from `margin_mm` beyond the nose landmark to
// `margin_mm` beyond the acromion landmark (inclusive), clipped to the
// volume. x and y are untouched; landmark indices shift with the cut.
inline CTVolume slab_select(const CTVolume& vol, float margin_mm = 30.f) {
    if (!vol.nose_slice || !vol.acromion_slice)
        throw ValueError("slab_select: nose and acromion landmarks required");
    vol.check_landmarks();
    const int margin = static_cast<int>(std::llround(margin_mm / vol.spacing[2]));
    const int lo = std::max(0, std::min(*vol.nose_slice, *vol.acromion_slice) - margin);
    const int hi = std::min(vol.d - 1, std::max(*vol.nose_slice, *vol.acromion_slice) + margin);
    CTVolume out(vol.w, vol.h, hi - lo + 1, 0.f, vol.spacing);
    out.head_to_feet = vol.head_to_feet;
    std::copy(vol.voxels.begin() + vol.index(0, 0, lo),
              vol.voxels.begin() + vol.index(0, 0, hi) + static_cast<std::size_t>(vol.w) * vol.h,
              out.voxels.begin());
    out.nose_slice = *vol.nose_slice - lo;
    out.acromion_slice = *vol.acromion_slice - lo;
    return out;
}

// Trilinear scale to exactly (W,H,D); aspect is not preserved. Spacing
// is rescaled so the physical field of view is unchanged.
inline CTVolume resize_to(const CTVolume& vol, std::array<int, 3> target) {
    if (target[0] <= 0 || target[1] <= 0 || target[2] <= 0)
        throw ValueError("resize_to: target extents must be positive");
    CTVolume out(target[0], target[1], target[2], 0.f,
                 {vol.spacing[0] * vol.w / target[0], vol.spacing[1] * vol.h / target[1],
                  vol.spacing[2] * vol.d / target[2]});
    out.head_to_feet = vol.head_to_feet;
    const double rx = static_cast<double>(vol.w) / target[0];
    const double ry = static_cast<double>(vol.h) / target[1];
    const double rz = static_cast<double>(vol.d) / target[2];
    for (int z = 0; z < target[2]; ++z)
        for (int y = 0; y < target[1]; ++y)
            for (int x = 0; x < target[0]; ++x)
                out.at(x, y, z) = detail::trilinear_at(
                    vol.voxels, vol.w, vol.h, vol.d, (x + 0.5) * rx - 0.5, (y + 0.5) * ry - 0.5,
                    (z + 0.5) * rz - 0.5);
    return out;
}

struct PrepOptions {
    float hu_lo = -400.f, hu_hi = 400.f;
    float target_spacing_mm = 1.f;
    bool slab_enabled = true;
    float slab_margin_mm = 30.f;
    std::array<int, 3> input_extent{150, 150, 90};  // (W,H,D)
};

// The full chain in fixed order: clip/normalize -> resample -> slab -> resize.
inline CTVolume preprocess(const CTVolume& vol, const PrepOptions& opt) {
    CTVolume v = clip_and_normalize(vol, opt.hu_lo, opt.hu_hi);
    v = resample_isotropic(v, opt.target_spacing_mm);
    if (opt.slab_enabled) v = slab_select(v, opt.slab_margin_mm);
    return resize_to(v, opt.input_extent);
}

// Geometry-only variant used to carry ground-truth masks through the
// same grid transforms (no intensity windowing); values are re-binarized
// by the caller.
inline CTVolume preprocess_geometry(const CTVolume& vol, const PrepOptions& opt) {
    CTVolume v = resample_isotropic(vol, opt.target_spacing_mm);
    if (opt.slab_enabled) v = slab_select(v, opt.slab_margin_mm);
    return resize_to(v, opt.input_extent);
}

}  // namespace gmge
