#include "gsmpc/splat/losses.hpp"

#include <cmath>

namespace gsmpc::splat {

namespace {

struct WindowIter {
    int x0, y0, size;  // top-left corner and edge length
};

// Full windows at the given stride; one whole-image window when the image is
// smaller than the window in either dimension.
std::vector<WindowIter> windows_for(const Image& img, const SsimConfig& cfg) {
    std::vector<WindowIter> out;
    if (img.width < cfg.window || img.height < cfg.window) {
        out.push_back({0, 0, std::min(img.width, img.height)});
        return out;
    }
    for (int y = 0; y + cfg.window <= img.height; y += cfg.stride)
        for (int x = 0; x + cfg.window <= img.width; x += cfg.stride)
            out.push_back({x, y, cfg.window});
    return out;
}

struct WindowStats {
    double mu_x, mu_y, var_x, var_y, cov;
    int n;
};

WindowStats window_stats(const Image& a, const Image& b, const WindowIter& w, int channel) {
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    const int n = w.size * w.size;
    for (int y = w.y0; y < w.y0 + w.size; ++y) {
        for (int x = w.x0; x < w.x0 + w.size; ++x) {
            const double va = a.at(x, y)[channel];
            const double vb = b.at(x, y)[channel];
            sx += va;
            sy += vb;
            sxx += va * va;
            syy += vb * vb;
            sxy += va * vb;
        }
    }
    WindowStats s;
    s.n = n;
    s.mu_x = sx / n;
    s.mu_y = sy / n;
    s.var_x = sxx / n - s.mu_x * s.mu_x;
    s.var_y = syy / n - s.mu_y * s.mu_y;
    s.cov = sxy / n - s.mu_x * s.mu_y;
    return s;
}

double window_ssim(const WindowStats& s, const SsimConfig& cfg) {
    const double a1 = 2.0 * s.mu_x * s.mu_y + cfg.c1;
    const double a2 = 2.0 * s.cov + cfg.c2;
    const double b1 = s.mu_x * s.mu_x + s.mu_y * s.mu_y + cfg.c1;
    const double b2 = s.var_x + s.var_y + cfg.c2;
    return (a1 * a2) / (b1 * b2);
}

} // namespace

double ssim(const Image& a, const Image& b, const SsimConfig& cfg) {
    if (!a.same_shape(b))
        throw DimensionMismatch("ssim operands differ in shape");
    const auto wins = windows_for(a, cfg);
    double total = 0.0;
    for (const auto& w : wins)
        for (int c = 0; c < 3; ++c)
            total += window_ssim(window_stats(a, b, w, c), cfg);
    return total / (3.0 * wins.size());
}

std::vector<Vec3> ssim_backward(const Image& a, const Image& b, const SsimConfig& cfg) {
    if (!a.same_shape(b))
        throw DimensionMismatch("ssim operands differ in shape");
    const auto wins = windows_for(a, cfg);
    std::vector<Vec3> grad(a.pixel_count(), Vec3::Zero());
    const double weight = 1.0 / (3.0 * wins.size());

    for (const auto& w : wins) {
        for (int c = 0; c < 3; ++c) {
            const WindowStats s = window_stats(a, b, w, c);
            const double a1 = 2.0 * s.mu_x * s.mu_y + cfg.c1;
            const double a2 = 2.0 * s.cov + cfg.c2;
            const double b1 = s.mu_x * s.mu_x + s.mu_y * s.mu_y + cfg.c1;
            const double b2 = s.var_x + s.var_y + cfg.c2;
            const double ssim_w = (a1 * a2) / (b1 * b2);
            const double inv = 1.0 / (b1 * b2);
            for (int y = w.y0; y < w.y0 + w.size; ++y) {
                for (int x = w.x0; x < w.x0 + w.size; ++x) {
                    const double va = a.at(x, y)[c];
                    const double vb = b.at(x, y)[c];
                    const double da1 = 2.0 * s.mu_y / s.n;
                    const double da2 = 2.0 * (vb - s.mu_y) / s.n;
                    const double db1 = 2.0 * s.mu_x / s.n;
                    const double db2 = 2.0 * (va - s.mu_x) / s.n;
                    const double d =
                        inv * (da1 * a2 + a1 * da2 - ssim_w * (db1 * b2 + b1 * db2));
                    grad[static_cast<std::size_t>(y) * a.width + x][c] += weight * d;
                }
            }
        }
    }
    return grad;
}

double recon_loss(const Image& recon, const Image& gt, double beta, const SsimConfig& ssim_cfg) {
    if (!recon.same_shape(gt))
        throw DimensionMismatch("recon_loss operands differ in shape");
    double l1 = 0.0;
    for (std::size_t i = 0; i < recon.pixel_count(); ++i)
        l1 += (recon.rgb[i] - gt.rgb[i]).cwiseAbs().sum();
    l1 /= 3.0 * recon.pixel_count();
    if (beta == 0.0)
        return l1;
    return l1 + beta * (1.0 - ssim(recon, gt, ssim_cfg));
}

std::vector<Vec3> recon_loss_backward(const Image& recon, const Image& gt, double beta,
                                      const SsimConfig& ssim_cfg) {
    if (!recon.same_shape(gt))
        throw DimensionMismatch("recon_loss operands differ in shape");
    std::vector<Vec3> grad(recon.pixel_count(), Vec3::Zero());
    const double w = 1.0 / (3.0 * recon.pixel_count());
    for (std::size_t i = 0; i < recon.pixel_count(); ++i) {
        for (int c = 0; c < 3; ++c) {
            const double d = recon.rgb[i][c] - gt.rgb[i][c];
            grad[i][c] = d > 0.0 ? w : (d < 0.0 ? -w : 0.0);
        }
    }
    if (beta != 0.0) {
        const auto ds = ssim_backward(recon, gt, ssim_cfg);
        for (std::size_t i = 0; i < grad.size(); ++i)
            grad[i] -= beta * ds[i];
    }
    return grad;
}

} // namespace gsmpc::splat
