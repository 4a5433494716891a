#pragma once

// JSON run configuration, benchmark presets, .dlsp checkpoints and field
// export.

#include "deepls/benchmarks.hpp"
#include "deepls/errors.hpp"
#include "deepls/optimize.hpp"
#include "deepls/verify.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>

namespace deepls {

using json = nlohmann::json;

namespace detail {

// Maps JSON pointers to the 1-based line where the value starts. Runs on
// text that already parsed, so it assumes well-formed input.
class LineLocator {
public:
    explicit LineLocator(const std::string& text) : s_(text) {
        skip_ws();
        if (i_ < s_.size()) value("");
    }

    /// Line of the pointer, or of its nearest recorded ancestor.
    int line(std::string ptr) const {
        for (;;) {
            auto it = lines_.find(ptr);
            if (it != lines_.end()) return it->second;
            if (ptr.empty()) return 1;
            ptr.erase(ptr.rfind('/'));
        }
    }

private:
    void skip_ws() {
        while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) {
            if (s_[i_] == '\n') ++line_;
            ++i_;
        }
    }

    std::string string() {
        std::string out;
        ++i_;  // opening quote
        while (i_ < s_.size() && s_[i_] != '"') {
            if (s_[i_] == '\\') ++i_;
            if (i_ < s_.size()) out += s_[i_++];
        }
        ++i_;
        return out;
    }

    static std::string escape(const std::string& key) {
        std::string out;
        for (char c : key) {
            if (c == '~') out += "~0";
            else if (c == '/') out += "~1";
            else out += c;
        }
        return out;
    }

    void value(const std::string& ptr) {
        lines_[ptr] = line_;
        const char c = s_[i_];
        if (c == '{') {
            ++i_;
            skip_ws();
            while (i_ < s_.size() && s_[i_] != '}') {
                const std::string key = string();
                skip_ws();
                ++i_;  // ':'
                skip_ws();
                value(ptr + "/" + escape(key));
                skip_ws();
                if (s_[i_] == ',') {
                    ++i_;
                    skip_ws();
                }
            }
            ++i_;
        } else if (c == '[') {
            ++i_;
            skip_ws();
            for (std::size_t k = 0; i_ < s_.size() && s_[i_] != ']'; ++k) {
                value(ptr + "/" + std::to_string(k));
                skip_ws();
                if (s_[i_] == ',') {
                    ++i_;
                    skip_ws();
                }
            }
            ++i_;
        } else if (c == '"') {
            string();
        } else {
            while (i_ < s_.size() && !std::strchr(",]} \t\r\n", s_[i_])) ++i_;
        }
    }

    const std::string& s_;
    std::size_t i_ = 0;
    int line_ = 1;
    std::map<std::string, int> lines_;
};

inline int line_of_offset(const std::string& text, std::size_t offset) {
    int line = 1;
    for (std::size_t i = 0; i < std::min(offset, text.size()); ++i)
        if (text[i] == '\n') ++line;
    return line;
}

// Reads typed members of one JSON object, anchoring errors to source lines.
class Section {
public:
    Section(const json& j, std::string ptr, const LineLocator* loc, std::string source)
        : j_(j), ptr_(std::move(ptr)), loc_(loc), source_(std::move(source)) {}

    [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
        const std::string p = key.empty() ? ptr_ : ptr_ + "/" + key;
        std::ostringstream os;
        os << source_ << ":" << (loc_ ? loc_->line(p) : 0) << ": " << (p.empty() ? "/" : p) << ": " << msg;
        throw ConfigError(os.str());
    }

    bool has(const std::string& key) const { return j_.is_object() && j_.contains(key) && !j_.at(key).is_null(); }
    const json& raw(const std::string& key) const { return j_.at(key); }

    Section child(const std::string& key) const {
        if (!has(key)) return Section(empty(), ptr_ + "/" + key, loc_, source_);
        if (!j_.at(key).is_object()) fail(key, "expected an object");
        return Section(j_.at(key), ptr_ + "/" + key, loc_, source_);
    }
    Section element(const std::string& key, std::size_t k) const {
        return Section(j_.at(key).at(k), ptr_ + "/" + key + "/" + std::to_string(k), loc_, source_);
    }

    double number(const std::string& key, double fallback) const {
        if (!has(key)) return fallback;
        return required_number(key);
    }
    double required_number(const std::string& key) const {
        if (!has(key)) fail(key, "missing required number");
        if (!j_.at(key).is_number()) fail(key, "expected a number");
        return j_.at(key).get<double>();
    }
    std::size_t count(const std::string& key, std::size_t fallback) const {
        if (!has(key)) return fallback;
        const json& v = j_.at(key);
        if (!v.is_number_integer() || v.get<long long>() < 0) fail(key, "expected a non-negative integer");
        return v.get<std::size_t>();
    }
    int integer(const std::string& key, int fallback) const {
        if (!has(key)) return fallback;
        if (!j_.at(key).is_number_integer()) fail(key, "expected an integer");
        return j_.at(key).get<int>();
    }
    bool boolean(const std::string& key, bool fallback) const {
        if (!has(key)) return fallback;
        if (!j_.at(key).is_boolean()) fail(key, "expected true or false");
        return j_.at(key).get<bool>();
    }
    std::string text(const std::string& key, const std::string& fallback) const {
        if (!has(key)) return fallback;
        if (!j_.at(key).is_string()) fail(key, "expected a string");
        return j_.at(key).get<std::string>();
    }
    std::vector<double> numbers(const std::string& key) const {
        if (!has(key)) return {};
        const json& v = j_.at(key);
        if (!v.is_array()) fail(key, "expected an array of numbers");
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number()) fail(key, "expected an array of numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }

    /// Runs f and re-throws any ConfigError it raises anchored at key.
    template <class F>
    auto guard(const std::string& key, F&& f) const {
        try {
            return f();
        } catch (const ConfigError& e) {
            fail(key, e.what());
        }
    }

private:
    static const json& empty() {
        static const json e = json::object();
        return e;
    }

    const json& j_;
    std::string ptr_;
    const LineLocator* loc_;
    std::string source_;
};

}  // namespace detail

struct OutputConfig {
    std::string directory = "out";
    std::size_t checkpoint_interval = 0;  // epochs; 0 disables
    std::size_t export_grid = 100;
    std::size_t n_mc = 20000;
};

struct RunConfig {
    std::string benchmark;  // empty for a user-defined problem
    Problem problem;
    NetworkConfig network;
    SamplingPlan sampling;
    bool resample = false;
    std::uint64_t sampling_seed = 0;
    ResidualWeights weights;
    double c_div = 1.0;
    double c_p = 1.0;
    AdamConfig adam;
    LbfgsConfig lbfgs;
    OutputConfig output;

    TrainSpec train_spec() const {
        TrainSpec s;
        s.problem = problem;
        s.network = network;
        s.sampling = sampling;
        s.sampling_seed = sampling_seed;
        s.resample = resample;
        s.weights = weights;
        s.adam = adam;
        s.lbfgs = lbfgs;
        return s;
    }

    /// Same seed for network initialisation and collocation sampling.
    void set_seed(std::uint64_t seed) {
        network.seed = seed;
        sampling_seed = seed;
    }
};

// ---------------------------------------------------------------------------
// Serialisation

inline json domain_to_json(const Domain& d) {
    return std::visit(
        [](const auto& s) -> json {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Annulus>)
                return {{"type", "annulus"}, {"r_inner", s.r_inner}, {"r_outer", s.r_outer}};
            else if constexpr (std::is_same_v<T, HalfShell>)
                return {{"type", "half_shell"}, {"r_inner", s.r_inner}, {"r_outer", s.r_outer}};
            else if constexpr (std::is_same_v<T, Rectangle>)
                return {{"type", "rectangle"}, {"length", s.length}, {"height", s.height}};
            else
                return {{"type", "layered_rectangle"}, {"length", s.length},  {"height", s.height},
                        {"layer_breaks", s.layer_breaks}, {"layer_k0", s.layer_k0}};
        },
        d.kind());
}

inline json geometry_to_json(const SegmentGeometry& g) {
    return std::visit(
        [](const auto& s) -> json {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, CircleBoundary>)
                return {{"kind", "circle"}, {"radius", s.radius}, {"inner", s.inner}};
            else if constexpr (std::is_same_v<T, HemisphereBoundary>)
                return {{"kind", "hemisphere"}, {"radius", s.radius}, {"inner", s.inner}};
            else if constexpr (std::is_same_v<T, BaseAnnulus>)
                return {{"kind", "base"}};
            else
                return {{"kind", "edge"}, {"edge", edge_name(s.edge)}, {"from", s.from}, {"to", s.to}};
        },
        g);
}

/// Boundary data are constants per segment; read the value at a point on it.
inline double segment_value(const BoundarySegment& s) {
    return s.value(boundary_quadrature(s.geometry, 1).points.col(0));
}

inline json to_json(const RunConfig& c) {
    json j;
    if (!c.benchmark.empty()) j["benchmark"] = c.benchmark;
    j["domain"] = domain_to_json(c.problem.domain);
    const MaterialModel& m = c.problem.material;
    json mat = {{"beta", m.beta}, {"mu", m.mu}, {"p_atm", m.p_atm}, {"k_min", m.k_min},
                {"k_max", m.k_max}, {"p_min", m.datum.p_min}};
    if (!m.k0.is_layered()) {
        const Matrix k = m.k0.at(Point::Zero(m.k0.dim()));
        if (m.k0.isotropic()) {
            mat["k0"] = k(0, 0);
        } else {
            json rows = json::array();
            for (Eigen::Index r = 0; r < k.rows(); ++r) {
                json row = json::array();
                for (Eigen::Index q = 0; q < k.cols(); ++q) row.push_back(k(r, q));
                rows.push_back(row);
            }
            mat["k0"] = rows;
        }
    }
    j["material"] = mat;
    json bnd = json::array();
    for (const auto& s : c.problem.segments)
        bnd.push_back({{"id", s.id},
                       {"type", s.is_pressure() ? "pressure" : "flux"},
                       {"value", segment_value(s)},
                       {"geometry", geometry_to_json(s.geometry)}});
    j["boundary"] = bnd;
    j["network"] = {{"depth", c.network.depth},
                    {"width", c.network.width},
                    {"n_f", c.network.n_features()},
                    {"frequencies", c.network.frequencies},
                    {"activation", to_string(c.network.activation)},
                    {"seed", c.network.seed}};
    json smp = {{"n_interior", c.sampling.n_interior},
                {"n_boundary", c.sampling.n_boundary},
                {"resample", c.resample},
                {"seed", c.sampling_seed}};
    if (c.sampling.n_per_segment) smp["n_per_segment"] = *c.sampling.n_per_segment;
    j["sampling"] = smp;
    j["weights"] = {{"mode", to_string(c.weights.mode)},
                    {"lambda", c.weights.lambda},
                    {"c_div", c.c_div},
                    {"c_p", c.c_p},
                    {"alpha", c.weights.alpha},
                    {"epsilon", c.weights.epsilon},
                    {"window", c.weights.window},
                    {"trigger_ratio", c.weights.trigger_ratio}};
    j["adam"] = {{"learning_rate", c.adam.learning_rate},
                 {"beta1", c.adam.beta1},
                 {"beta2", c.adam.beta2},
                 {"eps_hat", c.adam.eps_hat},
                 {"epochs", c.adam.epochs},
                 {"minibatch_size", c.adam.minibatch_size},
                 {"clip_norm", c.adam.clip_norm},
                 {"lr_decay", c.adam.lr_decay},
                 {"plateau_window", c.adam.plateau_window},
                 {"plateau_tolerance", c.adam.plateau_tolerance}};
    j["lbfgs"] = {{"max_iters", c.lbfgs.max_iters},
                  {"history_size", c.lbfgs.history_size},
                  {"wolfe_c1", c.lbfgs.wolfe_c1},
                  {"wolfe_c2", c.lbfgs.wolfe_c2},
                  {"grad_tol", c.lbfgs.grad_tol},
                  {"step_tol", c.lbfgs.step_tol},
                  {"max_line_search", c.lbfgs.max_line_search}};
    j["output"] = {{"directory", c.output.directory},
                   {"checkpoint_interval", c.output.checkpoint_interval},
                   {"export_grid", c.output.export_grid},
                   {"n_mc", c.output.n_mc}};
    return j;
}

namespace detail {

inline Domain parse_domain(const Section& s) {
    const std::string type = s.text("type", "");
    if (type == "annulus" || type == "half_shell") {
        const double ri = s.required_number("r_inner"), ro = s.required_number("r_outer");
        Domain d = type == "annulus" ? Domain(Annulus{ri, ro}) : Domain(HalfShell{ri, ro});
        s.guard("", [&] { d.validate(); });
        return d;
    }
    if (type == "rectangle") {
        Domain d(Rectangle{s.required_number("length"), s.required_number("height")});
        s.guard("", [&] { d.validate(); });
        return d;
    }
    if (type == "layered_rectangle") {
        const double L = s.required_number("length"), H = s.required_number("height");
        std::vector<double> k = s.numbers("layer_k0");
        if (k.empty()) s.fail("layer_k0", "layered_rectangle needs per-layer k0 values");
        std::vector<double> breaks = s.numbers("layer_breaks");
        if (!s.has("layer_breaks"))  // equal-height layers
            for (std::size_t i = 1; i < k.size(); ++i)
                breaks.push_back(H * static_cast<double>(i) / static_cast<double>(k.size()));
        Domain d(LayeredRectangle{L, H, breaks, k});
        s.guard("", [&] { d.validate(); });
        return d;
    }
    s.fail("type", "unknown domain type '" + type + "' (annulus, rectangle, layered_rectangle, half_shell)");
}

inline SegmentGeometry parse_geometry(const Section& s, const Domain& domain) {
    const std::string kind = s.text("kind", "");
    if (kind == "circle" || kind == "hemisphere") {
        const double r = s.required_number("radius");
        const bool inner = s.boolean("inner", false);
        if ((kind == "circle") != (domain.dim() == 2)) s.fail("kind", "boundary kind does not match the domain");
        if (kind == "circle") return CircleBoundary{r, inner};
        return HemisphereBoundary{r, inner};
    }
    if (kind == "base") {
        const auto* hs = domain.as<HalfShell>();
        if (!hs) s.fail("kind", "'base' boundary requires a half_shell domain");
        return BaseAnnulus{hs->r_inner, hs->r_outer};
    }
    if (kind == "edge") {
        if (domain.dim() != 2 || domain.as<Annulus>()) s.fail("kind", "'edge' boundary requires a rectangle domain");
        const std::string e = s.text("edge", "");
        Edge edge;
        if (e == "left") edge = Edge::left;
        else if (e == "right") edge = Edge::right;
        else if (e == "bottom") edge = Edge::bottom;
        else if (e == "top") edge = Edge::top;
        else s.fail("edge", "edge must be left, right, bottom or top");
        const double L = domain.extent_x(), H = domain.extent_y();
        const double span = (edge == Edge::left || edge == Edge::right) ? H : L;
        const double from = s.number("from", 0.0), to = s.number("to", span);
        if (!(from >= 0.0 && to <= span + 1e-12 && from < to)) s.fail("", "edge interval must satisfy 0 <= from < to <= edge length");
        return EdgeInterval{edge, from, to, L, H};
    }
    s.fail("kind", "unknown boundary kind '" + kind + "' (circle, edge, hemisphere, base)");
}

}  // namespace detail

/// Parses and cross-validates a run configuration. `source` names the input
/// in error messages, which take the form "source:line: /pointer: message".
inline RunConfig parse_config(const std::string& text, const std::string& source = "config") {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        std::ostringstream os;
        os << source << ":" << detail::line_of_offset(text, e.byte) << ": invalid JSON: " << e.what();
        throw ConfigError(os.str());
    }
    const detail::LineLocator loc(text);
    const detail::Section top(root, "", &loc, source);
    if (!root.is_object()) top.fail("", "top level must be an object");

    RunConfig c;
    c.benchmark = top.text("benchmark", "");
    if (!top.has("domain")) top.fail("domain", "missing domain section");
    c.problem.domain = detail::parse_domain(top.child("domain"));
    const Domain& dom = c.problem.domain;
    const int dim = dom.dim();

    const auto ms = top.child("material");
    MaterialModel& m = c.problem.material;
    m.beta = ms.number("beta", 0.0);
    m.mu = ms.number("mu", 1.0);
    m.p_atm = ms.number("p_atm", 1.0);
    m.datum.p_min = ms.number("p_min", 1e-8);
    if (const auto* lay = dom.as<LayeredRectangle>()) {
        if (ms.has("k0")) ms.fail("k0", "layered domains take per-layer values from domain.layer_k0");
        m.k0 = ms.guard("", [&] { return Permeability::layered(2, lay->layer_breaks, lay->layer_k0); });
    } else if (ms.has("k0") && ms.raw("k0").is_array()) {
        const json& a = ms.raw("k0");
        Matrix k(dim, dim);
        if (a.size() != static_cast<std::size_t>(dim)) ms.fail("k0", "tensor k0 must be " + std::to_string(dim) + "x" + std::to_string(dim));
        for (int r = 0; r < dim; ++r) {
            if (!a[static_cast<std::size_t>(r)].is_array() || a[static_cast<std::size_t>(r)].size() != static_cast<std::size_t>(dim))
                ms.fail("k0", "tensor k0 must be " + std::to_string(dim) + "x" + std::to_string(dim));
            for (int q = 0; q < dim; ++q) {
                const json& v = a[static_cast<std::size_t>(r)][static_cast<std::size_t>(q)];
                if (!v.is_number()) ms.fail("k0", "tensor entries must be numbers");
                k(r, q) = v.get<double>();
            }
        }
        m.k0 = ms.guard("k0", [&] { return Permeability::tensor(k); });
    } else {
        const double k = ms.number("k0", 1.0);
        if (!(k > 0.0)) ms.fail("k0", "k0 must be > 0");
        m.k0 = Permeability::scalar(dim, k);
    }
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const Matrix& k : m.k0.regions()) {
        Eigen::SelfAdjointEigenSolver<Matrix> eig(k, Eigen::EigenvaluesOnly);
        lo = std::min(lo, eig.eigenvalues().minCoeff());
        hi = std::max(hi, eig.eigenvalues().maxCoeff());
    }
    m.k_min = ms.number("k_min", lo);
    m.k_max = ms.number("k_max", hi);
    ms.guard("", [&] { m.validate(); });

    if (!top.has("boundary") || !root.at("boundary").is_array() || root.at("boundary").empty())
        top.fail("boundary", "missing boundary segment list");
    for (std::size_t i = 0; i < root.at("boundary").size(); ++i) {
        const auto bs = top.element("boundary", i);
        const std::string id = bs.text("id", "segment" + std::to_string(i));
        const std::string type = bs.text("type", "");
        const double value = bs.required_number("value");
        if (!bs.has("geometry")) bs.fail("geometry", "missing segment geometry");
        SegmentGeometry g = detail::parse_geometry(bs.child("geometry"), dom);
        if (type == "pressure") {
            bs.guard("value", [&] { (void)transform_boundary_pressure(m, value); });
            c.problem.segments.push_back(BoundarySegment::pressure(id, g, value));
        } else if (type == "flux") {
            c.problem.segments.push_back(BoundarySegment::flux(id, g, value));
        } else {
            bs.fail("type", "segment type must be 'pressure' or 'flux'");
        }
    }
    top.guard("boundary", [&] { validate_boundary_data(dom, c.problem.segments); });

    const auto ns = top.child("network");
    c.network.dim = dim;
    c.network.depth = ns.integer("depth", 4);
    c.network.width = ns.integer("width", 32);
    c.network.seed = static_cast<std::uint64_t>(ns.count("seed", 0));
    c.network.activation = ns.guard("activation", [&] { return activation_from_string(ns.text("activation", "tanh")); });
    if (ns.has("frequencies")) {
        c.network.frequencies = ns.numbers("frequencies");
        if (ns.has("n_f") && ns.count("n_f", 0) != c.network.frequencies.size())
            ns.fail("n_f", "n_f disagrees with the length of frequencies");
    } else {
        c.network.frequencies = default_frequencies(static_cast<int>(ns.count("n_f", 4)), dom.bounding_diagonal());
    }
    ns.guard("", [&] { c.network.validate(); });

    const auto ss = top.child("sampling");
    c.sampling.n_interior = ss.count("n_interior", 2000);
    c.sampling.n_boundary = ss.count("n_boundary", 400);
    if (ss.has("n_per_segment")) c.sampling.n_per_segment = ss.count("n_per_segment", 1);
    c.resample = ss.boolean("resample", false);
    c.sampling_seed = static_cast<std::uint64_t>(ss.count("seed", c.network.seed));
    if (c.sampling.n_interior < 1) ss.fail("n_interior", "need at least one interior point");

    const auto ws = top.child("weights");
    c.c_div = ws.number("c_div", 1.0);
    c.c_p = ws.number("c_p", 1.0);
    if (!(c.c_div > 0.0)) ws.fail("c_div", "c_div must be > 0");
    if (!(c.c_p > 0.0)) ws.fail("c_p", "c_p must be > 0");
    const WeightMode mode = ws.guard("mode", [&] { return weight_mode_from_string(ws.text("mode", "coercivity")); });
    if (mode == WeightMode::coercivity) {
        c.weights = coercivity_weights(m.mu, m.k_min, c.c_div, c.c_p);
    } else {
        const std::vector<double> l = ws.numbers("lambda");
        if (!l.empty()) {
            if (l.size() != 4) ws.fail("lambda", "lambda must have four entries");
            std::copy(l.begin(), l.end(), c.weights.lambda.begin());
        }
    }
    c.weights.mode = mode;
    c.weights.alpha = ws.number("alpha", 1.0);
    c.weights.epsilon = ws.number("epsilon", 1e-8);
    c.weights.window = ws.count("window", 50);
    c.weights.trigger_ratio = ws.number("trigger_ratio", 5.0);
    ws.guard("", [&] { c.weights.validate(); });

    const auto as = top.child("adam");
    c.adam.learning_rate = as.number("learning_rate", c.adam.learning_rate);
    c.adam.beta1 = as.number("beta1", c.adam.beta1);
    c.adam.beta2 = as.number("beta2", c.adam.beta2);
    c.adam.eps_hat = as.number("eps_hat", c.adam.eps_hat);
    c.adam.epochs = as.count("epochs", c.adam.epochs);
    c.adam.minibatch_size = as.count("minibatch_size", c.adam.minibatch_size);
    c.adam.clip_norm = as.number("clip_norm", c.adam.clip_norm);
    c.adam.lr_decay = as.number("lr_decay", c.adam.lr_decay);
    c.adam.plateau_window = as.count("plateau_window", c.adam.plateau_window);
    c.adam.plateau_tolerance = as.number("plateau_tolerance", c.adam.plateau_tolerance);
    as.guard("", [&] { c.adam.validate(); });

    const auto ls = top.child("lbfgs");
    c.lbfgs.max_iters = ls.count("max_iters", c.lbfgs.max_iters);
    c.lbfgs.history_size = ls.count("history_size", c.lbfgs.history_size);
    c.lbfgs.wolfe_c1 = ls.number("wolfe_c1", c.lbfgs.wolfe_c1);
    c.lbfgs.wolfe_c2 = ls.number("wolfe_c2", c.lbfgs.wolfe_c2);
    c.lbfgs.grad_tol = ls.number("grad_tol", c.lbfgs.grad_tol);
    c.lbfgs.step_tol = ls.number("step_tol", c.lbfgs.step_tol);
    c.lbfgs.max_line_search = ls.count("max_line_search", c.lbfgs.max_line_search);
    ls.guard("", [&] { c.lbfgs.validate(); });

    const auto os = top.child("output");
    c.output.directory = os.text("directory", c.output.directory);
    c.output.checkpoint_interval = os.count("checkpoint_interval", 0);
    c.output.export_grid = os.count("export_grid", 100);
    c.output.n_mc = os.count("n_mc", 20000);
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

// ---------------------------------------------------------------------------
// Benchmark presets

inline const std::vector<std::string>& benchmark_names() {
    static const std::vector<std::string> names{"cylinder", "sphere", "layered", "footing"};
    return names;
}

/// Built-in desk-scale configuration for a named benchmark: unit weights in
/// adaptive mode, depth 4, width 32, four Fourier frequencies, tanh.
inline RunConfig benchmark_config(const std::string& name) {
    RunConfig c;
    c.benchmark = name;
    if (name == "cylinder") {
        c.problem = cylinder_problem();
    } else if (name == "sphere") {
        c.problem = sphere_problem();
        c.sampling.n_interior = 4000;
        c.sampling.n_boundary = 800;
        c.lbfgs.max_iters = 3000;  // the 1/r^2 flux near the inner shell converges slowly
    } else if (name == "layered") {
        c.problem = layered_problem();
    } else if (name == "footing") {
        c.problem = footing_problem();
        c.sampling.n_interior = 3000;
        c.sampling.n_boundary = 600;
    } else {
        throw ConfigError("unknown benchmark '" + name + "' (cylinder, sphere, layered, footing)");
    }
    c.network.dim = c.problem.dim();
    c.network.frequencies = default_frequencies(4, c.problem.domain.bounding_diagonal());
    c.weights.mode = WeightMode::adaptive;
    return c;
}

// ---------------------------------------------------------------------------
// Checkpoints: u64 little-endian header length, JSON header, then the flat
// parameter vector as little-endian float64.

struct Checkpoint {
    NetworkConfig network;
    Vector theta;
    json meta;
};

inline json network_to_json(const NetworkConfig& n) {
    return {{"dim", n.dim},
            {"depth", n.depth},
            {"width", n.width},
            {"frequencies", n.frequencies},
            {"activation", to_string(n.activation)},
            {"seed", n.seed}};
}

inline NetworkConfig network_from_json(const json& j) {
    NetworkConfig n;
    n.dim = j.at("dim").get<int>();
    n.depth = j.at("depth").get<int>();
    n.width = j.at("width").get<int>();
    n.frequencies = j.at("frequencies").get<std::vector<double>>();
    n.activation = activation_from_string(j.at("activation").get<std::string>());
    n.seed = j.at("seed").get<std::uint64_t>();
    return n;
}

namespace detail {

inline std::uint64_t to_le(std::uint64_t v) {
    if constexpr (std::endian::native == std::endian::big) return __builtin_bswap64(v);
    return v;
}

}  // namespace detail

inline void write_checkpoint(const std::string& path, const Network& net, const Vector& theta, const json& meta = {}) {
    if (static_cast<std::size_t>(theta.size()) != net.parameter_count())
        throw ConfigError("write_checkpoint: parameter vector does not match the network");
    json tensors = json::array();
    for (const auto& e : net.shape_map())
        tensors.push_back({{"head", e.head},
                           {"layer", e.layer},
                           {"kind", e.kind == ShapeEntry::Kind::weight ? "weight" : "bias"},
                           {"offset", e.offset},
                           {"rows", e.rows},
                           {"cols", e.cols}});
    const json header = {{"format", "dlsp"},   {"version", 1},          {"dtype", "float64"},
                         {"count", theta.size()}, {"network", network_to_json(net.config())},
                         {"tensors", tensors}, {"meta", meta.is_null() ? json::object() : meta}};
    const std::string h = header.dump();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write checkpoint " + path);
    const std::uint64_t len = detail::to_le(h.size());
    out.write(reinterpret_cast<const char*>(&len), 8);
    out.write(h.data(), static_cast<std::streamsize>(h.size()));
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
        const std::uint64_t bits = detail::to_le(std::bit_cast<std::uint64_t>(theta(i)));
        out.write(reinterpret_cast<const char*>(&bits), 8);
    }
}

inline Checkpoint read_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open checkpoint " + path);
    std::uint64_t len = 0;
    if (!in.read(reinterpret_cast<char*>(&len), 8)) throw ConfigError(path + ": truncated checkpoint");
    len = detail::to_le(len);
    if (len > (1u << 26)) throw ConfigError(path + ": implausible checkpoint header length");
    std::string h(len, '\0');
    if (!in.read(h.data(), static_cast<std::streamsize>(len))) throw ConfigError(path + ": truncated checkpoint header");
    Checkpoint ck;
    try {
        const json header = json::parse(h);
        if (header.at("format") != "dlsp") throw ConfigError(path + ": not a dlsp checkpoint");
        ck.network = network_from_json(header.at("network"));
        ck.meta = header.value("meta", json::object());
        const auto count = header.at("count").get<std::size_t>();
        if (count != Network(ck.network).parameter_count())
            throw ConfigError(path + ": parameter count does not match the stored network shape");
        ck.theta.resize(static_cast<Eigen::Index>(count));
    } catch (const json::exception& e) {
        throw ConfigError(path + ": malformed checkpoint header: " + e.what());
    }
    for (Eigen::Index i = 0; i < ck.theta.size(); ++i) {
        std::uint64_t bits = 0;
        if (!in.read(reinterpret_cast<char*>(&bits), 8)) throw ConfigError(path + ": truncated parameter data");
        ck.theta(i) = std::bit_cast<double>(detail::to_le(bits));
    }
    return ck;
}

// ---------------------------------------------------------------------------
// Field export

/// Tensor grid with n points per axis over the bounding box, keeping only
/// points inside the (open) domain.
inline Matrix export_grid(const Domain& domain, std::size_t n) {
    if (n < 2) throw ConfigError("export grid needs at least 2 points per axis");
    const auto [lo, hi] = domain.bounding_box();
    const int d = domain.dim();
    std::vector<Point> pts;
    std::vector<std::size_t> idx(static_cast<std::size_t>(d), 0);
    const std::size_t total = static_cast<std::size_t>(std::pow(static_cast<double>(n), d));
    for (std::size_t flat = 0; flat < total; ++flat) {
        std::size_t r = flat;
        Point x(d);
        for (int a = 0; a < d; ++a) {
            const std::size_t k = r % n;
            r /= n;
            x(a) = lo(a) + (hi(a) - lo(a)) * static_cast<double>(k) / static_cast<double>(n - 1);
        }
        if (contains(domain, x)) pts.push_back(x);
    }
    Matrix X(d, static_cast<Eigen::Index>(pts.size()));
    for (std::size_t j = 0; j < pts.size(); ++j) X.col(static_cast<Eigen::Index>(j)) = pts[j];
    return X;
}

/// CSV with coordinates, P, p (physical pressure) and velocity components.
inline void write_field_csv(std::ostream& os, const Matrix& X, const FieldBatch& f, const MaterialModel& m) {
    const char* axes[] = {"x", "y", "z"};
    const Eigen::Index d = X.rows();
    for (Eigen::Index a = 0; a < d; ++a) os << axes[a] << ',';
    os << "P,p";
    for (Eigen::Index a = 0; a < d; ++a) os << ",u_" << axes[a];
    os << '\n';
    os.precision(12);
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        for (Eigen::Index a = 0; a < d; ++a) os << X(a, j) << ',';
        os << f.P(j) << ',' << hopf_cole_inverse(m, f.P(j));
        for (Eigen::Index a = 0; a < d; ++a) os << ',' << f.u(a, j);
        os << '\n';
    }
}

}  // namespace deepls
