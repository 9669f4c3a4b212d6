#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cloudburst/rng.hpp"

namespace cloudburst::photon {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm() const { return std::sqrt(dot(*this)); }
    Vec3 normalized() const { return *this * (1.0 / norm()); }
    bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

struct IceLayer {
    double z_top = 0.0;
    double z_bottom = 0.0;
    double abs_coeff = 0.0;   // 1/m
    double scat_coeff = 0.0;  // 1/m; zero means a pure absorber
};

// Layer boundaries are planes of slope `gradient` rising along `azimuth`.
struct Tilt {
    double azimuth = 0.0;
    double gradient = 0.0;
};

// Scattering is stronger along a horizontal axis: coefficient x (1 + k (d.a)^2).
struct Anisotropy {
    double axis_azimuth = 0.0;
    double strength = 0.0;
};

// Layered ice. Layers are ordered top to bottom and must tile a contiguous
// depth range.
class IceModel {
public:
    IceModel(std::vector<IceLayer> layers, Tilt tilt = {}, Anisotropy anisotropy = {}, double hg_g = 0.9);

    static IceModel uniform(double abs_coeff, double scat_coeff, double z_top, double z_bottom, double hg_g = 0.9);

    std::span<const IceLayer> layers() const { return layers_; }
    const Tilt& tilt() const { return tilt_; }
    const Anisotropy& anisotropy() const { return anisotropy_; }
    double hg_g() const { return hg_g_; }

    // Depth offset of every boundary at horizontal position (x, y).
    double boundary_shift(double x, double y) const;
    std::optional<std::size_t> layer_at(const Vec3& p) const;
    double scattering_scale(const Vec3& direction) const;
    Vec3 anisotropy_axis() const;

private:
    std::vector<IceLayer> layers_;
    Tilt tilt_;
    Anisotropy anisotropy_;
    double hg_g_;
};

struct Dom {
    Vec3 center;
    double radius = 0.18;
};

// Vertical strings on an nx x ny grid centred on the origin.
std::vector<Dom> grid_geometry(int nx, int ny, double string_spacing_m, int doms_per_string, double dom_spacing_m,
                               double top_z, double radius);

enum class PhotonStatus { in_flight, absorbed, detected, escaped };
std::string_view to_string(PhotonStatus s);

struct Photon {
    Vec3 position;
    Vec3 direction{0.0, 0.0, 1.0};
    double abs_tau = 0.0;
    PhotonStatus status = PhotonStatus::in_flight;
};

// Optical depth to absorption: -ln(u), u uniform on (0, 1].
double sample_abs_tau(RngStream& rng);
double abs_tau_from_uniform(double u);

// Henyey-Greenstein polar cosine for a uniform xi in [0, 1).
double hg_cos_theta(double g, double xi);

// New unit direction: HG polar angle about `direction`, uniform azimuth.
Vec3 sample_scatter(const Vec3& direction, double g, RngStream& rng);

enum class SegmentEnd { scatter, absorbed, escaped };

struct Segment {
    Vec3 start;
    Vec3 end;
    Vec3 direction;
    double length = 0.0;
    double abs_tau_used = 0.0;
    SegmentEnd end_reason = SegmentEnd::scatter;
};

// Walks the ray through the layers, spending `scat_tau` against the local
// (anisotropic) scattering coefficient and the photon's remaining
// absorption depth against the absorption coefficient, and stops at
// whichever runs out first or where the ray leaves the layer stack.
Segment step_to_next_scatter(const Photon& photon, const IceModel& ice, double scat_tau);
Segment step_to_next_scatter(const Photon& photon, const IceModel& ice, RngStream& rng);

struct DomHit {
    std::size_t dom = 0;
    double t = 0.0;         // fraction of the segment, in [0, 1]
    double distance = 0.0;  // metres from segment start
};

std::optional<DomHit> intersect_dom(const Segment& segment, std::span<const Dom> doms);

struct PropagationResult {
    PhotonStatus status = PhotonStatus::in_flight;
    std::size_t steps = 0;
    double path_m = 0.0;
    std::optional<std::size_t> dom;
    Vec3 end;
    bool step_limit_hit = false;
};

inline constexpr std::size_t kDefaultMaxSteps = 100000;

// Propagates until absorbed, detected or escaped. Throws NumericalFault if
// the state goes non-finite.
PropagationResult propagate(Photon& photon, const IceModel& ice, std::span<const Dom> doms, RngStream& rng,
                            std::size_t max_steps = kDefaultMaxSteps);

struct Source {
    enum class Kind { point, segment };
    Kind kind = Kind::point;
    Vec3 a;
    Vec3 b;  // segment end

    static Source point(Vec3 p) { return {Kind::point, p, p}; }
    static Source line(Vec3 from, Vec3 to) { return {Kind::segment, from, to}; }
};

// Initial state for photon `index`, drawn from that photon's own stream.
Photon emit(const Source& source, RngStream& rng);

struct PhotonRecord {
    std::uint64_t index = 0;
    PhotonStatus status = PhotonStatus::in_flight;
    std::size_t steps = 0;
    double path_m = 0.0;
    long dom = -1;
    Vec3 end;
};

struct BatchResult {
    std::uint64_t n_emitted = 0;
    std::uint64_t n_detected = 0;
    std::uint64_t n_absorbed = 0;
    std::uint64_t n_escaped = 0;
    std::uint64_t n_step_limited = 0;
    std::vector<std::uint64_t> dom_hits;
    std::uint64_t total_steps = 0;
    double total_path_m = 0.0;

    bool operator==(const BatchResult&) const = default;
};

struct BatchOptions {
    unsigned threads = 1;
    std::size_t max_steps = kDefaultMaxSteps;
    std::vector<PhotonRecord>* records = nullptr;  // optional per-photon dump
};

// Photon i always draws from substream ("photon", i); the work is split in
// fixed-size chunks and reduced in chunk order, so the result does not
// depend on the thread count.
BatchResult run_batch(std::uint64_t n_photons, const Source& source, const IceModel& ice, std::span<const Dom> doms,
                      std::uint64_t seed, const BatchOptions& options = {});

}  // namespace cloudburst::photon
