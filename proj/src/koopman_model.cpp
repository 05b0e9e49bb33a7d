#include "koop/koopman_model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace koop {

Vector KoopmanModel::lift(double x_scaled) const {
    if (!std::isfinite(x_scaled)) {
        throw std::invalid_argument("lift: non-finite state");
    }
    Vector z(d);
    z(0) = x_scaled;
    RowVector x(1);
    x(0) = x_scaled;
    z.tail(d - 1) = encoder.forward(x).col(0);
    return z;
}

Matrix KoopmanModel::lift_batch(const RowVector& xs) const {
    Matrix z(d, xs.size());
    z.row(0) = xs;
    z.bottomRows(d - 1) = encoder.forward(xs);
    return z;
}

Matrix KoopmanModel::predict_multistep(double x1_scaled, const Matrix& inputs) const {
    if (inputs.size() > 0 && inputs.rows() != m) {
        throw std::invalid_argument("predict_multistep: input rows != m");
    }
    const Eigen::Index steps = inputs.cols();
    Matrix traj(d, steps + 1);
    traj.col(0) = lift(x1_scaled);
    for (Eigen::Index t = 0; t < steps; ++t) {
        traj.col(t + 1).noalias() = A * traj.col(t) + B1 * inputs(0, t);
        if (m > 1) traj.col(t + 1).noalias() += B2 * inputs.col(t).tail(m - 1);
    }
    return traj;
}

KoopmanModel make_model(int d, int m, int h1, int h2, std::uint64_t seed, ScalingSpec scaling) {
    if (d < 2 || m < 1) throw std::invalid_argument("make_model: need d >= 2 and m >= 1");
    KoopmanModel model;
    model.d = d;
    model.m = m;
    Rng rng = Rng(seed).fork(3);
    model.encoder = MlpEncoder(d - 1, h1, h2, rng);
    model.A = Matrix::Identity(d, d);
    model.B1 = Vector::Zero(d);
    model.B2 = Matrix::Zero(d, m - 1);
    if (scaling.emg_norm.size() == 0 && m > 1) scaling.emg_norm = Vector::Ones(m - 1);
    model.scaling = std::move(scaling);
    return model;
}

namespace {

constexpr char kMagic[4] = {'K', 'O', 'O', 'P'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ofstream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_f64(std::ofstream& out, double v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

// Row-major block write, independent of Eigen's storage order.
void write_block(std::ofstream& out, const Matrix& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) write_f64(out, m(i, j));
}

void write_block(std::ofstream& out, const Vector& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) write_f64(out, v(i));
}

std::uint32_t read_u32(std::ifstream& in, const char* field) {
    std::uint32_t v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(v))) {
        throw std::runtime_error(std::string("load_model: truncated reading ") + field);
    }
    return v;
}

double read_f64(std::ifstream& in, const char* field) {
    double v = 0.0;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(v))) {
        throw std::runtime_error(std::string("load_model: truncated reading ") + field);
    }
    return v;
}

void read_block(std::ifstream& in, Matrix& m, const char* field) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = read_f64(in, field);
}

void read_block(std::ifstream& in, Vector& v, const char* field) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = read_f64(in, field);
}

} // namespace

void save_model(const KoopmanModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_model: cannot open " + path.string());
    out.write(kMagic, sizeof(kMagic));
    write_u32(out, kVersion);
    write_u32(out, static_cast<std::uint32_t>(model.d));
    write_u32(out, static_cast<std::uint32_t>(model.m));
    write_u32(out, static_cast<std::uint32_t>(model.encoder.hidden1()));
    write_u32(out, static_cast<std::uint32_t>(model.encoder.hidden2()));
    write_f64(out, model.scaling.angle_divisor);
    write_u32(out, static_cast<std::uint32_t>(model.scaling.emg_norm.size()));
    write_block(out, model.scaling.emg_norm);
    write_block(out, model.encoder.w1);
    write_block(out, model.encoder.b1);
    write_block(out, model.encoder.w2);
    write_block(out, model.encoder.b2);
    write_block(out, model.encoder.w3);
    write_block(out, model.encoder.b3);
    write_block(out, model.A);
    write_block(out, model.B1);
    write_block(out, model.B2);
    if (!out) throw std::runtime_error("save_model: write failed for " + path.string());
}

KoopmanModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_model: cannot open " + path.string());
    char magic[4] = {};
    if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw std::runtime_error("load_model: bad magic header in " + path.string());
    }
    const std::uint32_t version = read_u32(in, "version");
    if (version != kVersion) {
        throw std::runtime_error("load_model: unsupported version " + std::to_string(version));
    }
    KoopmanModel model;
    model.d = static_cast<int>(read_u32(in, "d"));
    model.m = static_cast<int>(read_u32(in, "m"));
    if (model.d < 2 || model.m < 1) throw std::runtime_error("load_model: bad dimensions");
    const int h1 = static_cast<int>(read_u32(in, "hidden1"));
    const int h2 = static_cast<int>(read_u32(in, "hidden2"));
    model.scaling.angle_divisor = read_f64(in, "angle_divisor");
    const int channels = static_cast<int>(read_u32(in, "emg_channels"));
    if (channels != model.m - 1) throw std::runtime_error("load_model: emg_channels != m - 1");
    model.scaling.emg_norm.resize(channels);
    read_block(in, model.scaling.emg_norm, "emg_norm");
    model.encoder.w1.resize(h1, 1);
    model.encoder.b1.resize(h1);
    model.encoder.w2.resize(h2, h1);
    model.encoder.b2.resize(h2);
    model.encoder.w3.resize(model.d - 1, h2);
    model.encoder.b3.resize(model.d - 1);
    model.A.resize(model.d, model.d);
    model.B1.resize(model.d);
    model.B2.resize(model.d, model.m - 1);
    read_block(in, model.encoder.w1, "w1");
    read_block(in, model.encoder.b1, "b1");
    read_block(in, model.encoder.w2, "w2");
    read_block(in, model.encoder.b2, "b2");
    read_block(in, model.encoder.w3, "w3");
    read_block(in, model.encoder.b3, "b3");
    read_block(in, model.A, "A");
    read_block(in, model.B1, "B1");
    read_block(in, model.B2, "B2");
    char extra = 0;
    if (in.read(&extra, 1)) {
        throw std::runtime_error("load_model: trailing bytes after B2 in " + path.string());
    }
    return model;
}

} // namespace koop
