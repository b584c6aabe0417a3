#include "infodesign/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "infodesign/dmdc.hpp"

namespace infodesign {

namespace {

using nlohmann::json;

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot open '" + path + "' for writing");
    return out;
}

void close_out(std::ofstream& out, const std::string& path) {
    out.close();
    if (!out) throw Error(ErrorKind::Io, "failed writing '" + path + "'");
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

void put_vector(std::ostream& os, const Vector& v) {
    for (Index i = 0; i < v.size(); ++i) os << ',' << format_double(v(i));
}

void put_nan(std::ostream& os, Index count) {
    for (Index i = 0; i < count; ++i) os << ",nan";
}

json matrix_json(const Matrix& M) {
    json rows = json::array();
    for (Index i = 0; i < M.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
        rows.push_back(row);
    }
    return json{{"rows", M.rows()}, {"cols", M.cols()}, {"data", rows}};
}

json vector_json(const Vector& v) {
    json a = json::array();
    for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

[[noreturn]] void bad_model(const std::string& what) {
    throw ConfigError(ConfigErrorKind::Syntax, "", "model file: " + what);
}

Matrix matrix_from(const json& j, const char* name) {
    if (!j.contains(name)) bad_model(std::string("missing '") + name + "'");
    const json& m = j.at(name);
    try {
        const Index rows = m.at("rows").get<Index>();
        const Index cols = m.at("cols").get<Index>();
        const json& data = m.at("data");
        if (rows < 0 || cols < 0 || static_cast<Index>(data.size()) != rows) bad_model(std::string("bad shape of ") + name);
        Matrix M(rows, cols);
        for (Index i = 0; i < rows; ++i) {
            const json& row = data[static_cast<std::size_t>(i)];
            if (static_cast<Index>(row.size()) != cols) bad_model(std::string("ragged rows in ") + name);
            for (Index c = 0; c < cols; ++c) M(i, c) = row[static_cast<std::size_t>(c)].get<double>();
        }
        return M;
    } catch (const json::exception& e) {
        bad_model(std::string("malformed '") + name + "': " + e.what());
    }
}

Vector vector_from(const json& j, const char* name) {
    if (!j.contains(name)) bad_model(std::string("missing '") + name + "'");
    try {
        const json& a = j.at(name);
        Vector v(static_cast<Index>(a.size()));
        for (Index i = 0; i < v.size(); ++i) v(i) = a[static_cast<std::size_t>(i)].get<double>();
        return v;
    } catch (const json::exception& e) {
        bad_model(std::string("malformed '") + name + "': " + e.what());
    }
}

} // namespace

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& text) {
    if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (text == "inf") return std::numeric_limits<double>::infinity();
    if (text == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    const char* end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end) throw Error(ErrorKind::Io, "malformed number '" + text + "'");
    return v;
}

void write_trajectory(const std::string& path, const Trajectory& traj, const std::vector<bool>& designed) {
    traj.validate();
    if (!designed.empty() && designed.size() != traj.inputs.size()) {
        throw Error(ErrorKind::InvalidInput, "designed flags must match the number of inputs");
    }
    const Index n = traj.state_dim();
    const Index m = traj.input_dim();
    std::ofstream out = open_out(path);
    out << 't';
    for (Index i = 1; i <= n; ++i) out << ",x" << i;
    for (Index j = 1; j <= m; ++j) out << ",u" << j;
    out << ",designed\n";
    for (std::size_t t = 0; t < traj.states.size(); ++t) {
        out << format_double(static_cast<double>(t) * traj.dt);
        put_vector(out, traj.states[t]);
        if (t < traj.inputs.size()) {
            put_vector(out, traj.inputs[t]);
            out << ',' << (!designed.empty() && designed[t] ? 1 : 0) << '\n';
        } else {
            put_nan(out, m);
            out << ",0\n";
        }
    }
    close_out(out, path);
}

Trajectory read_trajectory(const std::string& path, std::vector<bool>* designed) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open trajectory '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorKind::Io, "trajectory '" + path + "' is empty");
    const std::vector<std::string> header = split(strip_cr(line));
    if (header.empty() || header[0] != "t") throw Error(ErrorKind::Io, "trajectory header must start with 't'");
    Index n = 0;
    Index m = 0;
    bool has_flag = false;
    for (std::size_t c = 1; c < header.size(); ++c) {
        const std::string& h = header[c];
        if (h == "x" + std::to_string(n + 1) && m == 0 && !has_flag) {
            ++n;
        } else if (h == "u" + std::to_string(m + 1) && !has_flag) {
            ++m;
        } else if (h == "designed" && c + 1 == header.size()) {
            has_flag = true;
        } else {
            throw Error(ErrorKind::Io, "unexpected trajectory column '" + h + "'");
        }
    }
    if (n == 0) throw Error(ErrorKind::Io, "trajectory has no state columns");

    Trajectory traj;
    std::vector<bool> flags;
    std::vector<double> times;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip_cr(line);
        if (line.empty()) continue;
        const std::vector<std::string> cells = split(line);
        if (cells.size() != header.size()) {
            throw Error(ErrorKind::Io, "trajectory line " + std::to_string(lineno) + " has the wrong column count");
        }
        times.push_back(parse_double(cells[0]));
        Vector x(n);
        Vector u(m);
        for (Index i = 0; i < n; ++i) x(i) = parse_double(cells[static_cast<std::size_t>(1 + i)]);
        for (Index j = 0; j < m; ++j) u(j) = parse_double(cells[static_cast<std::size_t>(1 + n + j)]);
        traj.states.push_back(x);
        traj.inputs.push_back(u);
        flags.push_back(has_flag && cells.back() == "1");
    }
    if (traj.states.empty()) throw Error(ErrorKind::Io, "trajectory '" + path + "' has no rows");
    // the last row carries the final state only
    traj.inputs.pop_back();
    flags.pop_back();
    for (const Vector& u : traj.inputs) {
        if (!u.allFinite()) throw Error(ErrorKind::Io, "trajectory input entries must be finite except on the last row");
    }
    if (times.size() > 1) traj.dt = times[1];
    if (designed) *designed = flags;
    return traj;
}

void write_epoch_logs(const std::string& path, const std::vector<ExperimentRun>& runs) {
    std::ofstream out = open_out(path);
    out << "method,seed,epoch,k,trace_gamma,rmse_predicted,rmse_true,solver_status,constraint_margin_min,"
           "ccp_iterations,reduced\n";
    for (const ExperimentRun& run : runs) {
        for (const EpochLog& l : run.logs) {
            out << to_string(run.method) << ',' << run.seed << ',' << l.epoch << ',' << l.k << ','
                << format_double(l.trace_gamma) << ',' << format_double(l.rmse_predicted) << ','
                << format_double(l.rmse_true) << ',' << l.solver_status << ','
                << format_double(l.constraint_margin_min) << ',' << l.ccp_iterations << ',' << (l.reduced ? 1 : 0)
                << '\n';
        }
    }
    close_out(out, path);
}

void write_timing(const std::string& path, const std::vector<ExperimentRun>& runs) {
    std::ofstream out = open_out(path);
    out << "method,seed,epoch,plan_wallclock\n";
    for (const ExperimentRun& run : runs) {
        for (const EpochLog& l : run.logs) {
            out << to_string(run.method) << ',' << run.seed << ',' << l.epoch << ','
                << format_double(l.plan_wallclock) << '\n';
        }
    }
    close_out(out, path);
}

void write_summary(const std::string& path, const std::vector<BenchmarkRow>& rows) {
    std::ofstream out = open_out(path);
    out << "method,runs,trace_gamma_median,trace_gamma_iqr,rmse_true_median,rmse_true_iqr,rmse_predicted_median\n";
    for (const BenchmarkRow& r : rows) {
        out << to_string(r.method) << ',' << r.runs << ',' << format_double(r.trace_gamma_median) << ','
            << format_double(r.trace_gamma_iqr) << ',' << format_double(r.rmse_true_median) << ','
            << format_double(r.rmse_true_iqr) << ',' << format_double(r.rmse_predicted_median) << '\n';
    }
    close_out(out, path);
}

void write_summary_timing(const std::string& path, const std::vector<BenchmarkRow>& rows) {
    std::ofstream out = open_out(path);
    out << "method,wallclock_median,wallclock_iqr\n";
    for (const BenchmarkRow& r : rows) {
        out << to_string(r.method) << ',' << format_double(r.wallclock_median) << ','
            << format_double(r.wallclock_iqr) << '\n';
    }
    close_out(out, path);
}

void write_plan(const std::string& path, const PlanResult& plan) {
    const Index m = plan.inputs.empty() ? 0 : plan.inputs.front().size();
    const Index d = plan.predicted_states.empty() ? 0 : plan.predicted_states.front().size();
    std::ofstream out = open_out(path);
    out << "step";
    for (Index j = 1; j <= m; ++j) out << ",u" << j;
    for (Index i = 1; i <= d; ++i) out << ",x" << i;
    out << '\n';
    for (std::size_t t = 0; t < plan.predicted_states.size(); ++t) {
        out << t;
        if (t < plan.inputs.size()) {
            put_vector(out, plan.inputs[t]);
        } else {
            put_nan(out, m);
        }
        put_vector(out, plan.predicted_states[t]);
        out << '\n';
    }
    close_out(out, path);
}

void write_signal(const std::string& path, const Signal& signal, double dt) {
    const Index m = signal.empty() ? 0 : signal.front().size();
    std::ofstream out = open_out(path);
    out << 't';
    for (Index j = 1; j <= m; ++j) out << ",u" << j;
    out << '\n';
    for (std::size_t t = 0; t < signal.size(); ++t) {
        out << format_double(static_cast<double>(t) * dt);
        put_vector(out, signal[t]);
        out << '\n';
    }
    close_out(out, path);
}

void write_signal_scores(const std::string& path, const SignalScore& score) {
    std::ofstream out = open_out(path);
    out << "channel,rpf,rpf_defined,max_diff\n";
    for (std::size_t j = 0; j < score.rpf.size(); ++j) {
        out << j + 1 << ',' << format_double(score.rpf[j]) << ',' << (score.rpf_defined[j] ? 1 : 0) << ','
            << format_double(score.max_diff[j]) << '\n';
    }
    close_out(out, path);
}

StoredModel identify_model(const Trajectory& traj, const IdentifyOptions& opts) {
    const DataMatrices data = assemble_data(traj);
    if (data.m() < 1) throw Error(ErrorKind::InvalidInput, "identify needs at least one input channel");
    if (opts.sigma && !(*opts.sigma > 0.0)) throw Error(ErrorKind::InvalidInput, "sigma must be positive");
    StoredModel s;
    s.dt = traj.dt;
    s.n_full = data.n();
    s.u_last = data.U.col(data.k() - 1);

    if (!opts.dmdc) {
        double sigma = 0.0;
        if (opts.sigma) {
            sigma = *opts.sigma;
        } else {
            sigma = estimate_noise_sigma(data, estimate_theta(data, 1.0));
        }
        const ModelEstimate est = estimate_theta(data, sigma);
        s.sigma = sigma;
        s.A = est.A_hat;
        s.B = est.B_hat;
        s.Gamma = est.Gamma;
        s.Z_past = data.Z;
        s.x_last = data.Xp.col(data.k() - 1);
        return s;
    }

    const auto [p, r] = choose_ranks(data, opts.energy);
    const ReducedModel red = reduce(data, p, r);
    const Matrix Zr = reduced_stack(red, data);
    double sigma = 0.0;
    if (opts.sigma) {
        sigma = *opts.sigma;
    } else {
        const Matrix resid = red.U_hat.transpose() * data.Xp - red.A_tilde * Zr.topRows(red.r) - red.B_tilde * data.U;
        sigma = std::sqrt(resid.squaredNorm() / static_cast<double>(red.r * data.k()));
    }
    s.reduced = true;
    s.sigma = sigma;
    s.A = red.A_tilde;
    s.B = red.B_tilde;
    s.Gamma = reduced_gamma(red, data, sigma);
    s.Z_past = Zr;
    s.x_last = project_state(red, data.Xp.col(data.k() - 1));
    s.U_hat = red.U_hat;
    s.U_tilde_1 = red.U_tilde_1;
    s.U_tilde_2 = red.U_tilde_2;
    s.Sigma_tilde = red.Sigma_tilde;
    s.p = red.p;
    s.r = red.r;
    return s;
}

double stored_trace_gamma(const StoredModel& model) { return model.Gamma.trace(); }

double stored_rmse(const StoredModel& model) { return rmse(model.Gamma, model.d(), model.m()); }

void save_model(const std::string& path, const StoredModel& s) {
    json j;
    j["format_version"] = s.format_version;
    j["reduced"] = s.reduced;
    j["n"] = s.n_full;
    j["m"] = s.m();
    j["sigma"] = s.sigma;
    j["dt"] = s.dt;
    j["A"] = matrix_json(s.A);
    j["B"] = matrix_json(s.B);
    j["Gamma"] = matrix_json(s.Gamma);
    j["Z_past"] = matrix_json(s.Z_past);
    j["x_last"] = vector_json(s.x_last);
    j["u_last"] = vector_json(s.u_last);
    if (s.reduced) {
        j["dmdc"] = {
            {"p", s.p},
            {"r", s.r},
            {"U_hat", matrix_json(s.U_hat)},
            {"U_tilde_1", matrix_json(s.U_tilde_1)},
            {"U_tilde_2", matrix_json(s.U_tilde_2)},
            {"Sigma_tilde", vector_json(s.Sigma_tilde)},
        };
    }
    std::ofstream out = open_out(path);
    out << j.dump(1) << '\n';
    close_out(out, path);
}

StoredModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open model '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        bad_model(std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) bad_model("top level must be an object");
    StoredModel s;
    try {
        s.format_version = j.at("format_version").get<int>();
        if (s.format_version != 1) bad_model("unsupported format_version " + std::to_string(s.format_version));
        s.reduced = j.at("reduced").get<bool>();
        s.n_full = j.at("n").get<Index>();
        s.sigma = j.at("sigma").get<double>();
        s.dt = j.at("dt").get<double>();
    } catch (const json::exception& e) {
        bad_model(e.what());
    }
    s.A = matrix_from(j, "A");
    s.B = matrix_from(j, "B");
    s.Gamma = matrix_from(j, "Gamma");
    s.Z_past = matrix_from(j, "Z_past");
    s.x_last = vector_from(j, "x_last");
    s.u_last = vector_from(j, "u_last");
    if (s.reduced) {
        if (!j.contains("dmdc")) bad_model("reduced model without 'dmdc' factors");
        const json& dm = j.at("dmdc");
        try {
            s.p = dm.at("p").get<Index>();
            s.r = dm.at("r").get<Index>();
        } catch (const json::exception& e) {
            bad_model(e.what());
        }
        s.U_hat = matrix_from(dm, "U_hat");
        s.U_tilde_1 = matrix_from(dm, "U_tilde_1");
        s.U_tilde_2 = matrix_from(dm, "U_tilde_2");
        s.Sigma_tilde = vector_from(dm, "Sigma_tilde");
    }
    const Index d = s.A.rows();
    const Index m = s.B.cols();
    if (s.A.cols() != d || s.B.rows() != d || s.Z_past.rows() != d + m || s.x_last.size() != d ||
        s.u_last.size() != m || s.Gamma.rows() != d + m || s.Gamma.cols() != d + m) {
        bad_model("inconsistent matrix dimensions");
    }
    return s;
}

PlanProblem plan_problem_from_model(const StoredModel& model, const ExperimentSettings& s) {
    const Index m = model.m();
    if (s.u_lo.size() != m || s.u_hi.size() != m) {
        throw Error(ErrorKind::InvalidInput, "config input box does not match the model's input dimension");
    }
    PlanProblem p;
    p.A = model.A;
    p.B = model.B;
    p.Z_past = model.Z_past;
    p.x_init = model.x_last;
    p.u_prev = model.u_last;
    p.sigma = model.sigma;
    p.horizon = s.horizon;
    p.u_lo = s.u_lo;
    p.u_hi = s.u_hi;
    p.du_max = resolve_slew(s, m);
    p.beta = s.beta;
    if (model.reduced) {
        p.x_lo = s.xr_lo;
        p.x_hi = s.xr_hi;
    } else {
        p.x_lo = s.x_lo;
        p.x_hi = s.x_hi;
        p.terminal_target = s.terminal_target;
    }
    const Index d = model.d();
    if ((p.x_lo && p.x_lo->size() != d) || (p.x_hi && p.x_hi->size() != d) ||
        (p.terminal_target && p.terminal_target->size() != d)) {
        throw Error(ErrorKind::InvalidInput, "config state constraints do not match the model's state dimension");
    }
    return p;
}

} // namespace infodesign
