#include "nanosr/config.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

namespace nanosr::cli {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::runtime_error("config: bad boolean for " + key + ": " + v);
}

train::LossKind parse_loss(const std::string& v) {
    if (v == "l1") return train::LossKind::L1;
    if (v == "mse" || v == "l2") return train::LossKind::MSE;
    if (v == "charbonnier") return train::LossKind::Charbonnier;
    throw std::runtime_error("config: unknown loss " + v);
}

std::vector<long long> parse_list(const std::string& v) {
    std::vector<long long> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(std::stoll(item));
    }
    return out;
}

void apply_stage_key(train::Stage& s, const std::string& field, const std::string& value) {
    if (field == "loss")
        s.loss_kind = parse_loss(value);
    else if (field == "charbonnier_eps")
        s.charbonnier_eps = std::stof(value);
    else if (field == "lr")
        s.lr.init = std::stod(value);
    else if (field == "schedule") {
        if (value == "constant")
            s.lr.kind = train::LrSchedule::Kind::Constant;
        else if (value == "multistep")
            s.lr.kind = train::LrSchedule::Kind::Multistep;
        else if (value == "cosine")
            s.lr.kind = train::LrSchedule::Kind::Cosine;
        else
            throw std::runtime_error("config: unknown schedule " + value);
    } else if (field == "milestones")
        s.lr.milestones = parse_list(value);
    else if (field == "factor")
        s.lr.factor = std::stod(value);
    else if (field == "t_max")
        s.lr.t_max = std::stoll(value);
    else if (field == "lr_min")
        s.lr.lr_min = std::stod(value);
    else if (field == "iterations")
        s.iterations = std::stoll(value);
    else if (field == "batch")
        s.batch = std::stoi(value);
    else if (field == "patch")
        s.patch = std::stoi(value);
    else if (field == "augment_flips")
        s.augment_flips = parse_bool(value, field);
    else if (field == "augment_rot")
        s.augment_rot = parse_bool(value, field);
    else if (field == "model_scale")
        s.model_scale = std::stoi(value);
    else if (field == "warm_start") {
        if (value == "none")
            s.warm_start = train::WarmStart::None;
        else if (value == "from-2x-repetition")
            s.warm_start = train::WarmStart::From2xRepetition;
        else if (value == "from-checkpoint")
            s.warm_start = train::WarmStart::FromCheckpoint;
        else
            throw std::runtime_error("config: unknown warm_start " + value);
    } else if (field == "checkpoint")
        s.checkpoint = value;
    else if (field == "distill")
        s.distill = parse_bool(value, field);
    else if (field == "teacher")
        s.teacher_arch = value;
    else if (field == "teacher_weights")
        s.teacher_weights = value;
    else if (field == "lambda")
        s.distill_lambda = std::stod(value);
    else
        throw std::runtime_error("config: unknown stage key " + field);
}

}  // namespace

RunConfig parse_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("config: cannot open " + path);
    RunConfig cfg;
    std::map<int, train::Stage> stages;
    std::string line;
    int line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config: line " + std::to_string(line_no) +
                                     " is not key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));

        if (key == "arch")
            cfg.arch = value;
        else if (key == "dataset_root")
            cfg.dataset_root = value;
        else if (key == "seed")
            cfg.seed = std::stoull(value);
        else if (key == "desk")
            cfg.desk = parse_bool(value, key);
        else if (key == "power")
            cfg.power = std::stod(value);
        else if (key == "runtime_gate")
            cfg.runtime_gate = parse_bool(value, key);
        else if (key == "out_weights")
            cfg.out_weights = value;
        else if (key.rfind("stage.", 0) == 0) {
            const auto rest = key.substr(6);
            const auto dot = rest.find('.');
            if (dot == std::string::npos)
                throw std::runtime_error("config: malformed stage key " + key);
            const int index = std::stoi(rest.substr(0, dot));
            if (index < 1) throw std::runtime_error("config: stage indices start at 1");
            auto& stage = stages[index];
            if (stage.name.empty()) stage.name = std::to_string(index);
            apply_stage_key(stage, rest.substr(dot + 1), value);
        } else {
            throw std::runtime_error("config: unknown key " + key);
        }
    }
    int expect = 1;
    for (auto& [index, stage] : stages) {
        if (index != expect)
            throw std::runtime_error("config: stage indices must be contiguous from 1");
        ++expect;
        cfg.stages.push_back(std::move(stage));
    }
    return cfg;
}

}  // namespace nanosr::cli
