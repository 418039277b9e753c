#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "linids/baselines.hpp"
#include "linids/core.hpp"
#include "linids/estimator.hpp"
#include "linids/ids.hpp"
#include "linids/rng.hpp"

namespace linids::harness {

using json = nlohmann::json;

inline constexpr const char* library_version = "0.1.0";

enum class InstanceType { eoo, random, file };

struct InstanceSpec {
    InstanceType type = InstanceType::eoo;
    double epsilon = 0.01;
    double noise_std = 1.0;
    std::size_t d = 2;
    std::size_t k = 6;
    /// Fixed seed for a random instance; without it the instance is redrawn per repetition.
    std::optional<std::uint64_t> seed;
    std::string path;
};

enum class AlgorithmKind { ids, linucb, thompson, bayes_ids };

struct AlgorithmSpec {
    std::string name;
    AlgorithmKind kind = AlgorithmKind::ids;
    InfoGainVariant variant;
    BetaSpec beta;
    bool fast_pairing = true;
    bool thresholded_gaps = false;
    std::size_t mc_samples = 10000;

    void validate() const {
        if (name.empty())
            throw std::invalid_argument("algorithm name must not be empty");
        for (char c : name)
            if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.'))
                throw std::invalid_argument("algorithm name '" + name + "' has characters outside [A-Za-z0-9_.-]");
        variant.validate();
        beta.validate();
        if (kind == AlgorithmKind::bayes_ids && mc_samples < 100)
            throw std::invalid_argument("bayes_ids needs mc_samples >= 100");
    }
};

struct CheckpointSpec {
    /// Checkpoints per doubling of t; 1 gives {1, 2, 4, ...}.
    std::size_t per_octave = 1;
};

struct SweepSpec {
    std::vector<BetaSpec> beta;
    std::vector<std::string> beta_labels;
    std::vector<std::optional<double>> eta; // nullopt = automatic
    std::vector<std::string> eta_labels;
};

struct ExperimentConfig {
    InstanceSpec instance;
    std::vector<AlgorithmSpec> algorithms;
    std::size_t horizon = 1000;
    std::size_t repetitions = 1;
    std::uint64_t base_seed = 1;
    CheckpointSpec checkpoints;
    std::string output_dir = "out";
    std::optional<SweepSpec> sweep;
    /// Directory of the config file; relative instance paths resolve against it.
    std::string base_dir = ".";
    /// Canonical JSON text the config was parsed from (used for hashing).
    std::string canonical;

    void validate() const {
        if (horizon < 1)
            throw std::invalid_argument("horizon must be at least 1");
        if (repetitions < 1)
            throw std::invalid_argument("repetitions must be at least 1");
        if (algorithms.empty())
            throw std::invalid_argument("config lists no algorithms");
        if (checkpoints.per_octave < 1)
            throw std::invalid_argument("checkpoints.per_octave must be at least 1");
        for (std::size_t i = 0; i < algorithms.size(); ++i) {
            algorithms[i].validate();
            for (std::size_t j = 0; j < i; ++j)
                if (algorithms[j].name == algorithms[i].name)
                    throw std::invalid_argument("duplicate algorithm name '" + algorithms[i].name + "'");
        }
    }
};

inline const char* to_string(AlgorithmKind k) noexcept {
    switch (k) {
    case AlgorithmKind::ids: return "ids";
    case AlgorithmKind::linucb: return "linucb";
    case AlgorithmKind::thompson: return "thompson";
    case AlgorithmKind::bayes_ids: return "bayes_ids";
    }
    return "?";
}

/// 64-bit FNV-1a, used for the config fingerprint in the manifest.
inline std::uint64_t fnv1a(const std::string& text) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << v;
    return os.str();
}

namespace detail {

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

inline BetaSpec parse_beta(const json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "logdet")
            return BetaSpec::logdet();
        if (s == "simplified")
            return BetaSpec::simplified();
        throw std::invalid_argument("unknown beta mode '" + s + "'");
    }
    if (j.is_number())
        return BetaSpec::fixed(j.get<double>());
    if (j.is_object()) {
        const auto mode = j.at("mode").get<std::string>();
        if (mode == "fixed")
            return BetaSpec::fixed(j.at("value").get<double>());
        return parse_beta(json(mode));
    }
    throw std::invalid_argument("beta must be a string, number or object");
}

inline std::string beta_label(const json& j) {
    if (j.is_string())
        return j.get<std::string>();
    std::ostringstream os;
    os.precision(12);
    os << (j.is_object() ? j.at("value").get<double>() : j.get<double>());
    return os.str();
}

inline std::optional<double> parse_eta(const json& j) {
    if (j.is_string()) {
        if (j.get<std::string>() == "auto")
            return std::nullopt;
        throw std::invalid_argument("eta must be \"auto\" or a positive number");
    }
    const double v = j.get<double>();
    if (!(v > 0.0))
        throw std::invalid_argument("eta must be positive");
    return v;
}

inline AlgorithmKind parse_kind(const std::string& s) {
    if (s == "ids") return AlgorithmKind::ids;
    if (s == "linucb") return AlgorithmKind::linucb;
    if (s == "thompson") return AlgorithmKind::thompson;
    if (s == "bayes_ids") return AlgorithmKind::bayes_ids;
    throw std::invalid_argument("unknown algorithm kind '" + s + "'");
}

inline AlgorithmSpec parse_algorithm(const json& j) {
    AlgorithmSpec a;
    a.kind = parse_kind(j.at("kind").get<std::string>());
    if (j.contains("info_gain"))
        a.variant.kind = info_gain_kind_from_string(j.at("info_gain").get<std::string>());
    if (j.contains("beta"))
        a.beta = parse_beta(j.at("beta"));
    if (j.contains("eta")) {
        const auto eta = parse_eta(j.at("eta"));
        if (eta) {
            a.variant.learning_rate_mode = LearningRateMode::fixed;
            a.variant.fixed_eta = eta;
        }
    }
    a.fast_pairing = get_or(j, "fast_pairing", a.kind != AlgorithmKind::bayes_ids);
    a.thresholded_gaps = get_or(j, "thresholded_gaps", false);
    a.mc_samples = get_or<std::size_t>(j, "mc_samples", 10000);
    std::string fallback = to_string(a.kind);
    if (a.kind == AlgorithmKind::ids)
        fallback += std::string("-") + to_string(a.variant.kind);
    a.name = get_or(j, "name", fallback);
    return a;
}

inline InstanceSpec parse_instance(const json& j) {
    InstanceSpec s;
    const auto type = j.at("type").get<std::string>();
    if (type == "eoo") {
        s.type = InstanceType::eoo;
        s.epsilon = get_or(j, "epsilon", 0.01);
    } else if (type == "random") {
        s.type = InstanceType::random;
        s.d = j.at("d").get<std::size_t>();
        s.k = j.at("k").get<std::size_t>();
        if (j.contains("seed"))
            s.seed = j.at("seed").get<std::uint64_t>();
    } else if (type == "file") {
        s.type = InstanceType::file;
        s.path = j.at("path").get<std::string>();
    } else {
        throw std::invalid_argument("unknown instance type '" + type + "'");
    }
    if (j.contains("noise_std"))
        s.noise_std = j.at("noise_std").get<double>();
    else if (j.contains("noise_var"))
        s.noise_std = std::sqrt(j.at("noise_var").get<double>());
    if (!(s.noise_std >= 0.0))
        throw std::invalid_argument("noise_std must be nonnegative");
    return s;
}

} // namespace detail

/// Parses an experiment config from JSON. Unknown keys are rejected.
inline ExperimentConfig parse_config(const json& j, const std::string& base_dir = ".") {
    static const char* known[] = {"instance", "algorithms", "horizon", "repetitions", "base_seed",
                                  "checkpoints", "output_dir", "sweep"};
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* k : known)
            ok = ok || key == k;
        if (!ok)
            throw std::invalid_argument("unknown config key '" + key + "'");
    }
    ExperimentConfig c;
    try {
        c.instance = detail::parse_instance(j.at("instance"));
        for (const auto& a : j.at("algorithms"))
            c.algorithms.push_back(detail::parse_algorithm(a));
        c.horizon = j.at("horizon").get<std::size_t>();
        c.repetitions = detail::get_or<std::size_t>(j, "repetitions", 1);
        c.base_seed = detail::get_or<std::uint64_t>(j, "base_seed", 1);
        if (j.contains("checkpoints"))
            c.checkpoints.per_octave = detail::get_or<std::size_t>(j.at("checkpoints"), "per_octave", 1);
        c.output_dir = detail::get_or<std::string>(j, "output_dir", "out");
        if (j.contains("sweep")) {
            SweepSpec s;
            const auto& sj = j.at("sweep");
            for (const auto& b : sj.at("beta")) {
                s.beta.push_back(detail::parse_beta(b));
                s.beta_labels.push_back(detail::beta_label(b));
            }
            for (const auto& e : sj.at("eta")) {
                s.eta.push_back(detail::parse_eta(e));
                s.eta_labels.push_back(e.is_string() ? e.get<std::string>() : detail::beta_label(e));
            }
            if (s.beta.empty() || s.eta.empty())
                throw std::invalid_argument("sweep grids must be nonempty");
            c.sweep = std::move(s);
        }
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("malformed config: ") + e.what());
    }
    c.base_dir = base_dir;
    json hashed = j;
    hashed.erase("output_dir");
    c.canonical = hashed.dump();
    c.validate();
    return c;
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw std::invalid_argument("invalid JSON in '" + path + "': " + e.what());
    }
}

inline ExperimentConfig load_config(const std::string& path) {
    const auto dir = std::filesystem::path(path).parent_path();
    return parse_config(read_json_file(path), dir.empty() ? "." : dir.string());
}

/// Instance file: {"actions": [[...], ...], "theta": [...], "noise_std": s, "label": "..."}.
inline Instance instance_from_json(const json& j, std::optional<double> noise_override = std::nullopt) {
    try {
        const auto rows = j.at("actions").get<std::vector<std::vector<double>>>();
        const auto theta = j.at("theta").get<std::vector<double>>();
        if (rows.empty())
            throw std::invalid_argument("instance file has no actions");
        Matrix a(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(theta.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != theta.size())
                throw std::invalid_argument("action " + std::to_string(i) + " has the wrong dimension");
            for (std::size_t c = 0; c < theta.size(); ++c)
                a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
        }
        Vector th = Eigen::Map<const Vector>(theta.data(), static_cast<Eigen::Index>(theta.size()));
        const double noise = noise_override ? *noise_override : detail::get_or(j, "noise_std", 1.0);
        return Instance(std::move(a), std::move(th), noise, detail::get_or<std::string>(j, "label", "file"));
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("malformed instance file: ") + e.what());
    }
}

/// Ground-truth instance for repetition `rep`.
inline Instance make_instance(const ExperimentConfig& c, std::size_t rep) {
    const InstanceSpec& s = c.instance;
    switch (s.type) {
    case InstanceType::eoo: return make_eoo_instance(s.epsilon, s.noise_std);
    case InstanceType::random: {
        RngStream rng = s.seed ? derive_stream(*s.seed, 0, StreamPurpose::instance)
                               : derive_stream(c.base_seed, rep, StreamPurpose::instance);
        std::string label = "random-d" + std::to_string(s.d) + "-k" + std::to_string(s.k);
        if (!s.seed)
            label += "-rep" + std::to_string(rep);
        return make_random_instance(s.d, s.k, s.noise_std, rng, label);
    }
    case InstanceType::file: {
        std::filesystem::path p(s.path);
        if (p.is_relative())
            p = std::filesystem::path(c.base_dir) / p;
        const json j = read_json_file(p.string());
        return instance_from_json(j, j.contains("noise_std") ? std::nullopt : std::optional<double>(s.noise_std));
    }
    }
    throw std::logic_error("unknown instance type");
}

} // namespace linids::harness
