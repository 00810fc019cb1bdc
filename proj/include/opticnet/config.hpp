#pragma once

#include <fstream>
#include <sstream>

#include "model.hpp"
#include "optim.hpp"

namespace opticnet {

/// Flat run configuration: the published training hyperparameters plus model
/// variant, data locations and output directory. Loadable from a key=value
/// file; every key has a default; unknown keys are hard errors.
struct RunConfig {
    std::string variant = "opticnet47";
    int input_size = 224;
    int classes = 4;
    int width_div = 1;

    std::string data_root;       // class-tree dataset; empty means synthetic
    bool synthetic = false;
    int synth_per_class = 16;
    double train_fraction = 0.8;

    std::string out_dir = "runs";
    std::string penalties = "oct2017";  // built-in name or grid-file path

    int batch_size = 8;
    int epochs = 30;
    double lr = 1e-4;
    double gamma = 0.1;
    int patience = 6;
    double lr_min = 1e-8;
    double beta1 = 0.90;
    double beta2 = 0.99;
    long long steps = -1;
    uint64_t seed = 0;

    void set(const std::string& key, const std::string& value) {
        try {
            if (key == "variant") variant = value;
            else if (key == "input_size") input_size = std::stoi(value);
            else if (key == "classes") classes = std::stoi(value);
            else if (key == "width_div") width_div = std::stoi(value);
            else if (key == "data_root") data_root = value;
            else if (key == "synthetic") synthetic = (value == "1" || value == "true");
            else if (key == "synth_per_class") synth_per_class = std::stoi(value);
            else if (key == "train_fraction") train_fraction = std::stod(value);
            else if (key == "out_dir") out_dir = value;
            else if (key == "penalties") penalties = value;
            else if (key == "batch_size") batch_size = std::stoi(value);
            else if (key == "epochs") epochs = std::stoi(value);
            else if (key == "lr") lr = std::stod(value);
            else if (key == "gamma") gamma = std::stod(value);
            else if (key == "patience") patience = std::stoi(value);
            else if (key == "lr_min") lr_min = std::stod(value);
            else if (key == "beta1") beta1 = std::stod(value);
            else if (key == "beta2") beta2 = std::stod(value);
            else if (key == "steps") steps = std::stoll(value);
            else if (key == "seed") seed = std::stoull(value);
            else throw std::invalid_argument("config: unknown key '" + key + "'");
        } catch (const std::invalid_argument&) {
            throw;
        } catch (const std::exception&) {
            throw std::invalid_argument("config: bad value '" + value + "' for key '" + key + "'");
        }
    }

    /// key=value lines; '#' starts a comment; blank lines ignored.
    void load_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("config: cannot open " + path);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            auto first = line.find_first_not_of(" \t\r");
            if (first == std::string::npos) continue;
            auto eq = line.find('=');
            if (eq == std::string::npos) {
                throw std::invalid_argument("config: " + path + ":" + std::to_string(lineno) +
                                            ": expected key=value");
            }
            auto trim = [](std::string s) {
                auto b = s.find_first_not_of(" \t\r");
                auto e = s.find_last_not_of(" \t\r");
                return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
            };
            set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        }
    }

    void save_file(const std::string& path) const {
        std::ofstream os(path);
        if (!os) throw std::runtime_error("config: cannot write " + path);
        os << "variant=" << variant << "\ninput_size=" << input_size << "\nclasses=" << classes
           << "\nwidth_div=" << width_div << "\ndata_root=" << data_root
           << "\nsynthetic=" << (synthetic ? 1 : 0) << "\nsynth_per_class=" << synth_per_class
           << "\ntrain_fraction=" << train_fraction << "\nout_dir=" << out_dir
           << "\npenalties=" << penalties << "\nbatch_size=" << batch_size
           << "\nepochs=" << epochs << "\nlr=" << lr << "\ngamma=" << gamma
           << "\npatience=" << patience << "\nlr_min=" << lr_min << "\nbeta1=" << beta1
           << "\nbeta2=" << beta2 << "\nsteps=" << steps << "\nseed=" << seed << "\n";
    }

    ModelConfig model_config() const {
        auto v = parse_variant(variant);
        if (!v) throw std::invalid_argument("config: unknown variant '" + variant + "'");
        return ModelConfig::make(*v, input_size, classes, width_div);
    }

    template <class T>
    TrainConfig<T> train_config() const {
        TrainConfig<T> t;
        t.batch_size = batch_size;
        t.epochs = epochs;
        t.lr = static_cast<T>(lr);
        t.gamma = static_cast<T>(gamma);
        t.patience = patience;
        t.lr_min = static_cast<T>(lr_min);
        t.beta1 = static_cast<T>(beta1);
        t.beta2 = static_cast<T>(beta2);
        t.seed = seed;
        t.max_steps = steps;
        t.validate();
        return t;
    }
};

}  // namespace opticnet
