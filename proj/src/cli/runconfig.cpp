#include "infotime/cli/runconfig.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace infotime::cli {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream ss(text);
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

} // namespace

const std::map<std::string, std::string>& RunConfig::defaults() {
    static const std::map<std::string, std::string> kDefaults = {
        // data
        {"dataset", ""},
        {"out", ""},
        {"split", "6:2:2"},
        {"stride", "1"},
        {"target_channels", ""}, // empty = all channels
        // model
        {"backbone", "rmlp"}, // rmlp | mlp
        {"mode", "mixing"},   // mixing | independence
        {"lookback", "336"},
        {"horizon", "96"},
        {"latent", "64"},
        {"hidden", "256"},
        {"instance_norm", "true"},
        // training
        {"arm", "original"}, // original | tam | infotime
        {"epochs", "50"},
        {"batch", "32"},
        {"lr", "0.001"},
        {"q_lr", "0.001"},
        {"patience", "3"},
        {"grad_clip", "10"},
        {"seed", "0"},
        // information bottleneck
        {"beta", "1"},
        {"recon_weight", "1"},
        // TAM
        {"levels", "2"},
        {"lambda", "0.8"},
        // experiment runners
        {"experiment", "ablation"}, // ablation | synthetic
        {"horizons", "96,192"},
        {"arms", "original,tam,infotime"},
        {"seeds", "0,1,2"},
        {"jobs", "1"},
        {"sweep_param", "beta"}, // beta | lambda
        {"sweep_grid", "0,1,100"},
        {"sigma_grid", "1,2"},
        {"covariate_lead", "true"},
        // synthetic generator
        {"synth_components", "5"},
        {"synth_targets", "1"},
        {"synth_length", "10000"},
        {"synth_segment", "64"},
        {"synth_interpolate", "true"},
        {"synth_sigma_train", "0"},
        {"synth_sigma_test", "0"},
        {"synth_test_fraction", "0.2"},
        {"synth_noise_channels", "0"},
        // artifacts
        {"timing", "false"}, // real wall time in run.csv breaks reproducibility
    };
    return kDefaults;
}

RunConfig::RunConfig() : values_(defaults()) {}

void RunConfig::load_file(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("config: cannot open " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const auto comment = line.find('#');
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: " + path.string() + ":" + std::to_string(line_no) +
                              ": expected key = value");
        set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

void RunConfig::set(const std::string& key, const std::string& value) {
    if (!values_.count(key)) throw ConfigError("config: unknown key \"" + key + "\"");
    values_[key] = value;
}

const std::string& RunConfig::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("config: unknown key \"" + key + "\"");
    return it->second;
}

double RunConfig::get_double(const std::string& key) const {
    const std::string& text = get(key);
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end != text.c_str() + text.size() || text.empty())
        throw ConfigError("config: " + key + " = \"" + text + "\" is not a number");
    return v;
}

std::size_t RunConfig::get_size(const std::string& key) const {
    const double v = get_double(key);
    if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v)))
        throw ConfigError("config: " + key + " must be a non-negative integer");
    return static_cast<std::size_t>(v);
}

std::uint64_t RunConfig::get_u64(const std::string& key) const {
    return static_cast<std::uint64_t>(get_size(key));
}

bool RunConfig::get_bool(const std::string& key) const {
    const std::string& text = get(key);
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw ConfigError("config: " + key + " = \"" + text + "\" is not a boolean");
}

std::vector<double> RunConfig::get_double_list(const std::string& key) const {
    std::vector<double> out;
    for (const std::string& item : split_list(get(key))) {
        char* end = nullptr;
        const double v = std::strtod(item.c_str(), &end);
        if (end != item.c_str() + item.size())
            throw ConfigError("config: " + key + " has non-numeric item \"" + item + "\"");
        out.push_back(v);
    }
    return out;
}

std::vector<std::size_t> RunConfig::get_size_list(const std::string& key) const {
    std::vector<std::size_t> out;
    for (double v : get_double_list(key)) {
        if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v)))
            throw ConfigError("config: " + key + " must list non-negative integers");
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

std::vector<std::uint64_t> RunConfig::get_u64_list(const std::string& key) const {
    std::vector<std::uint64_t> out;
    for (std::size_t v : get_size_list(key)) out.push_back(v);
    return out;
}

std::string RunConfig::echo() const {
    std::ostringstream os;
    for (const auto& [key, value] : values_) os << key << " = " << value << '\n';
    return os.str();
}

train::TrainConfig RunConfig::to_train_config() const {
    train::TrainConfig cfg;
    cfg.model.lookback = get_size("lookback");
    cfg.model.horizon = get_size("horizon");
    cfg.model.latent = get_size("latent");
    cfg.model.hidden = get_size("hidden");
    cfg.model.instance_norm = get_bool("instance_norm");
    const std::string& mode = get("mode");
    if (mode == "mixing")
        cfg.model.mode = models::ChannelMode::kMixing;
    else if (mode == "independence")
        cfg.model.mode = models::ChannelMode::kIndependence;
    else
        throw ConfigError("config: mode must be mixing | independence");
    const std::string& backbone = get("backbone");
    if (backbone == "rmlp")
        cfg.backbone = train::Backbone::kRmlp;
    else if (backbone == "mlp")
        cfg.backbone = train::Backbone::kMlp;
    else
        throw ConfigError("config: backbone must be rmlp | mlp");
    cfg.arm = train::parse_arm(get("arm"));
    cfg.epochs = get_size("epochs");
    cfg.batch_size = get_size("batch");
    cfg.lr = get_double("lr");
    cfg.q_lr = get_double("q_lr");
    cfg.patience = get_size("patience");
    cfg.grad_clip = get_double("grad_clip");
    cfg.stride = get_size("stride");
    cfg.seed = get_u64("seed");
    cfg.split = data::parse_split(get("split"));
    cfg.target_channels = get_size_list("target_channels");
    cfg.ib.beta = get_double("beta");
    cfg.ib.recon_weight = get_double("recon_weight");
    cfg.tam.n_levels = get_size("levels");
    cfg.tam.blend_lambda = get_double("lambda");
    return cfg;
}

data::SyntheticSpec RunConfig::to_synthetic_spec() const {
    data::SyntheticSpec spec;
    spec.components = get_size("synth_components");
    spec.num_targets = get_size("synth_targets");
    spec.length = get_size("synth_length");
    spec.segment_length = get_size("synth_segment");
    spec.interpolate = get_bool("synth_interpolate");
    spec.sigma_train = get_double("synth_sigma_train");
    spec.sigma_test = get_double("synth_sigma_test");
    spec.test_fraction = get_double("synth_test_fraction");
    spec.noise_channels = get_size("synth_noise_channels");
    spec.seed = get_u64("seed");
    return spec;
}

} // namespace infotime::cli
