#include "cloudburst/photon.hpp"

#include <algorithm>
#include <atomic>
#include <limits>
#include <numbers>
#include <thread>

#include <fmt/format.h>

#include "cloudburst/errors.hpp"

namespace cloudburst::photon {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint64_t kChunk = 1024;

Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

std::string dump(const Photon& p) {
    return fmt::format("photon at ({}, {}, {}) dir ({}, {}, {}) abs_tau {}", p.position.x, p.position.y,
                       p.position.z, p.direction.x, p.direction.y, p.direction.z, p.abs_tau);
}

}  // namespace

IceModel::IceModel(std::vector<IceLayer> layers, Tilt tilt, Anisotropy anisotropy, double hg_g)
    : layers_(std::move(layers)), tilt_(tilt), anisotropy_(anisotropy), hg_g_(hg_g) {
    if (layers_.empty()) throw ConfigError("ice model needs at least one layer");
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const IceLayer& l = layers_[i];
        if (!(l.z_top > l.z_bottom)) throw ConfigError(fmt::format("layer {}: z_top must be above z_bottom", i));
        if (!(l.abs_coeff > 0.0)) throw ConfigError(fmt::format("layer {}: abs_coeff must be positive", i));
        if (!(l.scat_coeff >= 0.0)) throw ConfigError(fmt::format("layer {}: scat_coeff must be >= 0", i));
        if (i > 0 && layers_[i - 1].z_bottom != l.z_top) {
            throw ConfigError(fmt::format("layers {} and {} are not contiguous", i - 1, i));
        }
    }
    if (!(std::abs(hg_g_) < 1.0)) throw ConfigError(fmt::format("scattering parameter g={} outside (-1, 1)", hg_g_));
    if (!(anisotropy_.strength >= 0.0)) throw ConfigError("anisotropy strength must be >= 0");
}

IceModel IceModel::uniform(double abs_coeff, double scat_coeff, double z_top, double z_bottom, double hg_g) {
    return IceModel({IceLayer{z_top, z_bottom, abs_coeff, scat_coeff}}, {}, {}, hg_g);
}

double IceModel::boundary_shift(double x, double y) const {
    return tilt_.gradient * (x * std::cos(tilt_.azimuth) + y * std::sin(tilt_.azimuth));
}

std::optional<std::size_t> IceModel::layer_at(const Vec3& p) const {
    const double z = p.z - boundary_shift(p.x, p.y);
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        if (z < layers_[i].z_top && z >= layers_[i].z_bottom) return i;
    }
    return std::nullopt;
}

Vec3 IceModel::anisotropy_axis() const {
    return {std::cos(anisotropy_.axis_azimuth), std::sin(anisotropy_.axis_azimuth), 0.0};
}

double IceModel::scattering_scale(const Vec3& direction) const {
    const double c = direction.dot(anisotropy_axis());
    return 1.0 + anisotropy_.strength * c * c;
}

std::vector<Dom> grid_geometry(int nx, int ny, double string_spacing_m, int doms_per_string, double dom_spacing_m,
                               double top_z, double radius) {
    std::vector<Dom> doms;
    const double x0 = -0.5 * (nx - 1) * string_spacing_m;
    const double y0 = -0.5 * (ny - 1) * string_spacing_m;
    for (int i = 0; i < nx; ++i) {
        for (int j = 0; j < ny; ++j) {
            for (int k = 0; k < doms_per_string; ++k) {
                doms.push_back({{x0 + i * string_spacing_m, y0 + j * string_spacing_m, top_z - k * dom_spacing_m},
                                radius});
            }
        }
    }
    return doms;
}

std::string_view to_string(PhotonStatus s) {
    switch (s) {
        case PhotonStatus::in_flight: return "in_flight";
        case PhotonStatus::absorbed: return "absorbed";
        case PhotonStatus::detected: return "detected";
        case PhotonStatus::escaped: return "escaped";
    }
    return "?";
}

double abs_tau_from_uniform(double u) { return -std::log(u); }

double sample_abs_tau(RngStream& rng) { return abs_tau_from_uniform(rng.uniform_pos()); }

double hg_cos_theta(double g, double xi) {
    if (std::abs(g) < 1e-6) return 2.0 * xi - 1.0;
    const double s = (1.0 - g * g) / (1.0 - g + 2.0 * g * xi);
    return std::clamp((1.0 + g * g - s * s) / (2.0 * g), -1.0, 1.0);
}

Vec3 sample_scatter(const Vec3& direction, double g, RngStream& rng) {
    if (!(std::abs(g) < 1.0)) throw ConfigError(fmt::format("scattering parameter g={} outside (-1, 1)", g));
    const double cos_t = hg_cos_theta(g, rng.uniform());
    const double phi = 2.0 * std::numbers::pi * rng.uniform();
    const double sin_t = std::sqrt(std::max(0.0, 1.0 - cos_t * cos_t));

    const Vec3 w = direction.normalized();
    const Vec3 helper = std::abs(w.z) < 0.9 ? Vec3{0.0, 0.0, 1.0} : Vec3{1.0, 0.0, 0.0};
    const Vec3 u = cross(helper, w).normalized();
    const Vec3 v = cross(w, u);
    const Vec3 out = u * (sin_t * std::cos(phi)) + v * (sin_t * std::sin(phi)) + w * cos_t;
    return out.normalized();
}

Segment step_to_next_scatter(const Photon& photon, const IceModel& ice, double scat_tau) {
    Segment seg;
    seg.start = photon.position;
    seg.direction = photon.direction;

    auto layer = ice.layer_at(photon.position);
    if (!layer) {
        seg.end = photon.position;
        seg.end_reason = SegmentEnd::escaped;
        return seg;
    }

    const Vec3& d = photon.direction;
    const auto layers = ice.layers();
    const double mu_scale = ice.scattering_scale(d);
    // Rate of change of the tilt-corrected depth along the ray.
    const double vz = d.z - ice.boundary_shift(d.x, d.y);

    double scat_left = scat_tau;
    double abs_left = photon.abs_tau;
    double travelled = 0.0;
    Vec3 p = photon.position;

    while (true) {
        const IceLayer& l = layers[*layer];
        const double mu_s = l.scat_coeff * mu_scale;
        const double mu_a = l.abs_coeff;
        const double zc = p.z - ice.boundary_shift(p.x, p.y);

        double to_boundary = kInf;
        if (vz > 0.0) to_boundary = std::max(0.0, (l.z_top - zc) / vz);
        if (vz < 0.0) to_boundary = std::max(0.0, (l.z_bottom - zc) / vz);
        const double to_scatter = mu_s > 0.0 ? scat_left / mu_s : kInf;
        const double to_absorb = abs_left / mu_a;

        const double s = std::min({to_boundary, to_scatter, to_absorb});
        if (!std::isfinite(s)) {
            throw NumericalFault(fmt::format("unbounded step for {}", dump(photon)));
        }
        p = p + d * s;
        travelled += s;
        abs_left -= mu_a * s;
        scat_left -= mu_s * s;

        if (s == to_absorb) {
            seg.end_reason = SegmentEnd::absorbed;
            abs_left = 0.0;
            break;
        }
        if (s == to_scatter) {
            seg.end_reason = SegmentEnd::scatter;
            break;
        }
        // Crossed into the neighbouring layer, or out of the stack.
        if (vz > 0.0) {
            if (*layer == 0) {
                seg.end_reason = SegmentEnd::escaped;
                break;
            }
            layer = *layer - 1;
        } else {
            if (*layer + 1 == layers.size()) {
                seg.end_reason = SegmentEnd::escaped;
                break;
            }
            layer = *layer + 1;
        }
    }
    seg.end = p;
    seg.length = travelled;
    seg.abs_tau_used = photon.abs_tau - std::max(0.0, abs_left);
    return seg;
}

Segment step_to_next_scatter(const Photon& photon, const IceModel& ice, RngStream& rng) {
    return step_to_next_scatter(photon, ice, abs_tau_from_uniform(rng.uniform_pos()));
}

std::optional<DomHit> intersect_dom(const Segment& segment, std::span<const Dom> doms) {
    std::optional<DomHit> best;
    const Vec3 d = segment.direction;
    const double length = segment.length;
    for (std::size_t i = 0; i < doms.size(); ++i) {
        const Vec3 oc = segment.start - doms[i].center;
        const double b = d.dot(oc);
        const double c = oc.dot(oc) - doms[i].radius * doms[i].radius;
        double s;
        if (c <= 0.0) {
            s = 0.0;
        } else {
            const double disc = b * b - c;
            if (disc < 0.0) continue;
            s = -b - std::sqrt(disc);
            if (s < 0.0 || s > length) continue;
        }
        if (!best || s < best->distance) {
            best = DomHit{i, length > 0.0 ? s / length : 0.0, s};
        }
    }
    return best;
}

PropagationResult propagate(Photon& photon, const IceModel& ice, std::span<const Dom> doms, RngStream& rng,
                            std::size_t max_steps) {
    PropagationResult r;
    photon.status = PhotonStatus::in_flight;
    while (photon.status == PhotonStatus::in_flight) {
        if (r.steps >= max_steps) {
            photon.status = PhotonStatus::escaped;
            r.step_limit_hit = true;
            break;
        }
        ++r.steps;
        const Segment seg = step_to_next_scatter(photon, ice, rng);
        if (const auto hit = intersect_dom(seg, doms)) {
            photon.position = seg.start + seg.direction * hit->distance;
            photon.status = PhotonStatus::detected;
            r.path_m += hit->distance;
            r.dom = hit->dom;
            break;
        }
        photon.position = seg.end;
        photon.abs_tau -= seg.abs_tau_used;
        r.path_m += seg.length;
        if (seg.end_reason == SegmentEnd::absorbed) {
            photon.abs_tau = 0.0;
            photon.status = PhotonStatus::absorbed;
        } else if (seg.end_reason == SegmentEnd::escaped) {
            photon.status = PhotonStatus::escaped;
        } else {
            photon.direction = sample_scatter(photon.direction, ice.hg_g(), rng);
        }
        if (!photon.position.finite() || !photon.direction.finite() || !std::isfinite(photon.abs_tau)) {
            throw NumericalFault("non-finite photon state: " + dump(photon));
        }
    }
    r.status = photon.status;
    r.end = photon.position;
    return r;
}

Photon emit(const Source& source, RngStream& rng) {
    Photon p;
    const double cos_t = 2.0 * rng.uniform() - 1.0;
    const double phi = 2.0 * std::numbers::pi * rng.uniform();
    const double sin_t = std::sqrt(std::max(0.0, 1.0 - cos_t * cos_t));
    p.direction = Vec3{sin_t * std::cos(phi), sin_t * std::sin(phi), cos_t}.normalized();
    if (source.kind == Source::Kind::segment) {
        p.position = source.a + (source.b - source.a) * rng.uniform();
    } else {
        p.position = source.a;
    }
    p.abs_tau = sample_abs_tau(rng);
    return p;
}

BatchResult run_batch(std::uint64_t n_photons, const Source& source, const IceModel& ice, std::span<const Dom> doms,
                      std::uint64_t seed, const BatchOptions& options) {
    const std::uint64_t n_chunks = (n_photons + kChunk - 1) / kChunk;
    std::vector<BatchResult> partial(n_chunks);
    if (options.records) options.records->assign(n_photons, PhotonRecord{});

    auto run_chunk = [&](std::uint64_t c) {
        BatchResult& out = partial[c];
        out.dom_hits.assign(doms.size(), 0);
        const std::uint64_t end = std::min(n_photons, (c + 1) * kChunk);
        for (std::uint64_t i = c * kChunk; i < end; ++i) {
            RngStream rng(seed, "photon", i);
            Photon ph = emit(source, rng);
            const PropagationResult r = propagate(ph, ice, doms, rng, options.max_steps);
            ++out.n_emitted;
            out.total_steps += r.steps;
            out.total_path_m += r.path_m;
            if (r.step_limit_hit) ++out.n_step_limited;
            switch (r.status) {
                case PhotonStatus::detected:
                    ++out.n_detected;
                    ++out.dom_hits[*r.dom];
                    break;
                case PhotonStatus::absorbed: ++out.n_absorbed; break;
                default: ++out.n_escaped; break;
            }
            if (options.records) {
                (*options.records)[i] = PhotonRecord{i, r.status, r.steps, r.path_m,
                                                     r.dom ? static_cast<long>(*r.dom) : -1L, r.end};
            }
        }
    };

    const unsigned threads = std::max(1u, options.threads);
    if (threads == 1 || n_chunks <= 1) {
        for (std::uint64_t c = 0; c < n_chunks; ++c) run_chunk(c);
    } else {
        std::atomic<std::uint64_t> next{0};
        std::vector<std::exception_ptr> errors(threads);
        std::vector<std::thread> workers;
        for (unsigned w = 0; w < threads; ++w) {
            workers.emplace_back([&, w] {
                try {
                    for (std::uint64_t c = next++; c < n_chunks; c = next++) run_chunk(c);
                } catch (...) {
                    errors[w] = std::current_exception();
                    next = n_chunks;
                }
            });
        }
        for (std::thread& t : workers) t.join();
        for (const auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }

    BatchResult total;
    total.dom_hits.assign(doms.size(), 0);
    for (const BatchResult& p : partial) {
        total.n_emitted += p.n_emitted;
        total.n_detected += p.n_detected;
        total.n_absorbed += p.n_absorbed;
        total.n_escaped += p.n_escaped;
        total.n_step_limited += p.n_step_limited;
        total.total_steps += p.total_steps;
        total.total_path_m += p.total_path_m;
        for (std::size_t d = 0; d < doms.size(); ++d) total.dom_hits[d] += p.dom_hits[d];
    }
    return total;
}

}  // namespace cloudburst::photon
