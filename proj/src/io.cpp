#include "snnconv/io.hpp"

#include <cstring>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "snnconv/errors.hpp"

namespace snnconv {

using json = nlohmann::ordered_json;

namespace {
constexpr char kB64Alphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
}

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 3 <= bytes.size(); i += 3) {
        const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
        out.push_back(kB64Alphabet[(v >> 18) & 63]);
        out.push_back(kB64Alphabet[(v >> 12) & 63]);
        out.push_back(kB64Alphabet[(v >> 6) & 63]);
        out.push_back(kB64Alphabet[v & 63]);
    }
    const std::size_t rem = bytes.size() - i;
    if (rem == 1) {
        const std::uint32_t v = bytes[i] << 16;
        out.push_back(kB64Alphabet[(v >> 18) & 63]);
        out.push_back(kB64Alphabet[(v >> 12) & 63]);
        out.push_back('=');
        out.push_back('=');
    } else if (rem == 2) {
        const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
        out.push_back(kB64Alphabet[(v >> 18) & 63]);
        out.push_back(kB64Alphabet[(v >> 12) & 63]);
        out.push_back(kB64Alphabet[(v >> 6) & 63]);
        out.push_back('=');
    }
    return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
    if (text.size() % 4 != 0) throw ParseError("malformed base64: length not a multiple of 4");
    static int lut[256];
    static bool init = [] {
        for (int& v : lut) v = -1;
        for (int i = 0; i < 64; ++i) lut[static_cast<unsigned char>(kB64Alphabet[i])] = i;
        return true;
    }();
    (void)init;
    std::vector<std::uint8_t> out;
    out.reserve(text.size() / 4 * 3);
    for (std::size_t i = 0; i < text.size(); i += 4) {
        int vals[4];
        int pad = 0;
        for (int k = 0; k < 4; ++k) {
            const char c = text[i + k];
            if (c == '=') {
                if (i + 4 != text.size() || k < 2) throw ParseError("malformed base64 padding");
                vals[k] = 0;
                ++pad;
            } else {
                vals[k] = lut[static_cast<unsigned char>(c)];
                if (vals[k] < 0) throw ParseError(std::string("malformed base64 character '") + c + "'");
                if (pad > 0) throw ParseError("malformed base64: data after padding");
            }
        }
        const std::uint32_t v = (vals[0] << 18) | (vals[1] << 12) | (vals[2] << 6) | vals[3];
        out.push_back((v >> 16) & 0xff);
        if (pad < 2) out.push_back((v >> 8) & 0xff);
        if (pad < 1) out.push_back(v & 0xff);
    }
    return out;
}

std::string floats_to_base64(const std::vector<double>& values) {
    std::vector<std::uint8_t> bytes(values.size() * 4);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const float f = static_cast<float>(values[i]);
        std::uint32_t u;
        std::memcpy(&u, &f, 4);
        bytes[4 * i] = u & 0xff;
        bytes[4 * i + 1] = (u >> 8) & 0xff;
        bytes[4 * i + 2] = (u >> 16) & 0xff;
        bytes[4 * i + 3] = (u >> 24) & 0xff;
    }
    return base64_encode(bytes);
}

std::vector<double> base64_to_floats(const std::string& text) {
    const std::vector<std::uint8_t> bytes = base64_decode(text);
    if (bytes.size() % 4 != 0) throw ParseError("float payload length not a multiple of 4");
    std::vector<double> out(bytes.size() / 4);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const std::uint32_t u = bytes[4 * i] | (bytes[4 * i + 1] << 8) |
                                (bytes[4 * i + 2] << 16) |
                                (static_cast<std::uint32_t>(bytes[4 * i + 3]) << 24);
        float f;
        std::memcpy(&f, &u, 4);
        out[i] = static_cast<double>(f);
    }
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ParseError("cannot write " + path);
    out << contents;
    if (!out) throw ParseError("write failed for " + path);
}

namespace {

json layer_to_json(const Layer& l) {
    json j;
    j["kind"] = layer_kind_name(l.kind);
    switch (l.kind) {
        case LayerKind::Dense:
            j["out"] = l.weights.shape[0];
            j["in"] = l.weights.shape[1];
            j["weights"] = floats_to_base64(l.weights.data);
            j["bias"] = floats_to_base64(l.bias.data);
            break;
        case LayerKind::Conv2d:
            j["out_channels"] = l.weights.shape[0];
            j["in_channels"] = l.weights.shape[1];
            j["kh"] = l.weights.shape[2];
            j["kw"] = l.weights.shape[3];
            j["stride"] = l.stride;
            j["padding"] = l.padding;
            j["weights"] = floats_to_base64(l.weights.data);
            j["bias"] = floats_to_base64(l.bias.data);
            break;
        case LayerKind::AvgPool:
            j["window"] = l.window;
            break;
        case LayerKind::Relu:
        case LayerKind::Flatten:
            break;
    }
    return j;
}

Layer layer_from_json(const json& j, std::size_t index) {
    const std::string where = "layers[" + std::to_string(index) + "]";
    if (!j.contains("kind")) throw ParseError(where + ": missing kind");
    const std::string kind = j.at("kind").get<std::string>();
    auto decode = [&](const char* field, std::vector<std::size_t> shape) {
        const std::vector<double> vals = base64_to_floats(j.at(field).get<std::string>());
        if (vals.size() != shape_product(shape)) {
            throw ParseError(where + "." + field + ": decoded " + std::to_string(vals.size()) +
                             " values, expected " + std::to_string(shape_product(shape)));
        }
        return Tensor(std::move(shape), vals);
    };
    try {
        if (kind == "dense") {
            const std::size_t out = j.at("out").get<std::size_t>();
            const std::size_t in = j.at("in").get<std::size_t>();
            return Layer::dense(decode("weights", {out, in}), decode("bias", {out}));
        }
        if (kind == "conv2d") {
            const std::size_t co = j.at("out_channels").get<std::size_t>();
            const std::size_t ci = j.at("in_channels").get<std::size_t>();
            const std::size_t kh = j.at("kh").get<std::size_t>();
            const std::size_t kw = j.at("kw").get<std::size_t>();
            return Layer::conv(decode("weights", {co, ci, kh, kw}), decode("bias", {co}),
                               j.at("stride").get<int>(), j.at("padding").get<int>());
        }
        if (kind == "relu") return Layer::relu_layer();
        if (kind == "flatten") return Layer::flatten();
        if (kind == "avgpool") return Layer::avgpool(j.at("window").get<int>());
    } catch (const json::exception& e) {
        throw ParseError(where + ": " + e.what());
    }
    throw ParseError(where + ": unsupported layer kind '" + kind +
                     "' (maxpool and other kinds are out of scope)");
}

json parse_json(const std::string& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
}

}  // namespace

void save_model(const AnnModel& model, const std::string& path) {
    model.validate();
    json j;
    j["format_version"] = 1;
    j["input_shape"] = model.input_shape;
    j["layers"] = json::array();
    for (const Layer& l : model.layers) j["layers"].push_back(layer_to_json(l));
    write_file(path, j.dump(2) + "\n");
}

AnnModel load_model(const std::string& path) {
    const json j = parse_json(path);
    try {
        if (j.at("format_version").get<int>() != 1) {
            throw ParseError(path + ": unsupported format_version");
        }
        AnnModel m;
        m.input_shape = j.at("input_shape").get<std::vector<std::size_t>>();
        const json& layers = j.at("layers");
        for (std::size_t i = 0; i < layers.size(); ++i) {
            m.layers.push_back(layer_from_json(layers[i], i));
        }
        m.validate();
        return m;
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
}

LabeledDataset load_dataset(const std::string& path) {
    std::istringstream in(read_file(path));
    LabeledDataset ds;
    std::string line;
    int lineno = 0;
    long declared_features = -1;
    std::size_t arity = 0;
    int max_label = -1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream hs(line.substr(1));
            std::string word;
            long n = -1;
            if (hs >> word >> n && word == "features" && n > 0) {
                declared_features = n;
                continue;
            }
            throw ParseError(path + ":" + std::to_string(lineno) + ": malformed header line");
        }
        std::vector<double> fields;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) {
            try {
                std::size_t used = 0;
                fields.push_back(std::stod(cell, &used));
                while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
                if (used != cell.size()) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw ParseError(path + ":" + std::to_string(lineno) + ": bad number '" + cell + "'");
            }
        }
        if (fields.size() < 2) {
            throw ParseError(path + ":" + std::to_string(lineno) + ": need a label and features");
        }
        const double label_d = fields[0];
        const int label = static_cast<int>(label_d);
        if (label_d != static_cast<double>(label) || label < 0) {
            throw ParseError(path + ":" + std::to_string(lineno) + ": label must be a non-negative integer");
        }
        std::vector<double> features(fields.begin() + 1, fields.end());
        if (arity == 0) {
            arity = features.size();
            if (declared_features >= 0 && static_cast<std::size_t>(declared_features) != arity) {
                throw ParseError(path + ":" + std::to_string(lineno) + ": row has " +
                                 std::to_string(arity) + " features, header declared " +
                                 std::to_string(declared_features));
            }
        } else if (features.size() != arity) {
            throw ParseError(path + ":" + std::to_string(lineno) + ": ragged row, expected " +
                             std::to_string(arity) + " features");
        }
        max_label = std::max(max_label, label);
        ds.samples.push_back(Tensor::from_vector(std::move(features)));
        ds.labels.push_back(label);
    }
    if (ds.samples.empty()) throw ParseError(path + ": empty dataset");
    ds.num_classes = max_label + 1;
    return ds;
}

void save_dataset(const LabeledDataset& ds, const std::string& path) {
    std::ostringstream os;
    os.precision(17);
    if (!ds.samples.empty()) os << "# features " << ds.samples[0].size() << "\n";
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        os << ds.labels[i];
        for (double v : ds.samples[i].data) os << "," << v;
        os << "\n";
    }
    write_file(path, os.str());
}

void save_profile(const ActivationProfile& profile, const std::string& path) {
    json j;
    j["format_version"] = 1;
    j["max_post_relu"] = profile.max_post_relu;
    j["has_pre_relu"] = profile.has_pre_relu;
    if (profile.has_pre_relu) {
        json shapes = json::array();
        if (!profile.pre_relu_samples.empty()) {
            for (const Tensor& t : profile.pre_relu_samples[0]) shapes.push_back(t.shape);
        }
        j["pre_relu_shapes"] = shapes;
        json samples = json::array();
        for (const std::vector<Tensor>& per_layer : profile.pre_relu_samples) {
            json layers = json::array();
            for (const Tensor& t : per_layer) layers.push_back(floats_to_base64(t.data));
            samples.push_back(std::move(layers));
        }
        j["pre_relu"] = std::move(samples);
    }
    write_file(path, j.dump(2) + "\n");
}

ActivationProfile load_profile(const std::string& path) {
    const json j = parse_json(path);
    try {
        if (j.at("format_version").get<int>() != 1) {
            throw ParseError(path + ": unsupported format_version");
        }
        ActivationProfile p;
        p.max_post_relu = j.at("max_post_relu").get<std::vector<double>>();
        p.has_pre_relu = j.at("has_pre_relu").get<bool>();
        if (p.has_pre_relu) {
            std::vector<std::vector<std::size_t>> shapes =
                j.at("pre_relu_shapes").get<std::vector<std::vector<std::size_t>>>();
            for (const json& sample : j.at("pre_relu")) {
                std::vector<Tensor> per_layer;
                if (sample.size() != shapes.size()) throw ParseError(path + ": pre_relu layer count mismatch");
                for (std::size_t l = 0; l < sample.size(); ++l) {
                    std::vector<double> vals = base64_to_floats(sample[l].get<std::string>());
                    if (vals.size() != shape_product(shapes[l])) {
                        throw ParseError(path + ": pre_relu payload does not match shape");
                    }
                    per_layer.emplace_back(shapes[l], std::move(vals));
                }
                p.pre_relu_samples.push_back(std::move(per_layer));
            }
        }
        return p;
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
}

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& v, const std::string& where) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ParseError(where + ": bad number '" + v + "'");
    }
}

long parse_long(const std::string& v, const std::string& where) {
    try {
        std::size_t used = 0;
        const long d = std::stol(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ParseError(where + ": bad integer '" + v + "'");
    }
}

bool parse_bool(const std::string& v, const std::string& where) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ParseError(where + ": bad boolean '" + v + "'");
}

std::vector<std::string> split_csv(const std::string& v) {
    std::vector<std::string> out;
    std::istringstream in(v);
    std::string cell;
    while (std::getline(in, cell, ',')) out.push_back(trim(cell));
    return out;
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
    std::istringstream in(read_file(path));
    RunConfig cfg;
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string where = path + ":" + std::to_string(lineno);
        std::string t = trim(line);
        const std::size_t comment = t.find('#');
        if (comment != std::string::npos) t = trim(t.substr(0, comment));
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']') throw ParseError(where + ": malformed section header");
            section = t.substr(1, t.size() - 2);
            if (section != "thresholds" && section != "confidence" && section != "simulation" &&
                section != "energy") {
                throw ParseError(where + ": unknown section [" + section + "]");
            }
            continue;
        }
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos) throw ParseError(where + ": expected key = value");
        const std::string key = trim(t.substr(0, eq));
        const std::string val = trim(t.substr(eq + 1));
        if (section == "thresholds") {
            if (key == "regime") cfg.thresholds.regime = regime_from_string(val);
            else if (key == "alpha") cfg.thresholds.alpha = parse_double(val, where);
            else if (key == "k_a") cfg.thresholds.k_a = parse_double(val, where);
            else if (key == "k_i") cfg.thresholds.k_i = parse_double(val, where);
            else if (key == "C") cfg.thresholds.c_sensitivity = parse_double(val, where);
            else if (key == "tau_mp") cfg.thresholds.tau_mp = parse_double(val, where);
            else if (key == "tau_rd") cfg.thresholds.tau_rd = parse_double(val, where);
            else if (key == "v_T") {
                cfg.thresholds.v_T.clear();
                for (const std::string& c : split_csv(val))
                    cfg.thresholds.v_T.push_back(parse_double(c, where));
            } else if (key == "early_steps") {
                cfg.thresholds.early_steps = static_cast<int>(parse_long(val, where));
            } else throw ParseError(where + ": unknown key '" + key + "' in [thresholds]");
        } else if (section == "confidence") {
            if (key == "enabled") cfg.confidence.enabled = parse_bool(val, where);
            else if (key == "layers") {
                cfg.confidence.layers.clear();
                if (!val.empty() && val != "last") {
                    for (const std::string& c : split_csv(val))
                        cfg.confidence.layers.push_back(static_cast<int>(parse_long(c, where)));
                }
            } else if (key == "early_steps") {
                cfg.confidence.early_steps = static_cast<int>(parse_long(val, where));
                cfg.thresholds.early_steps = cfg.confidence.early_steps;
            } else if (key == "seed") cfg.confidence.seed = static_cast<std::uint64_t>(parse_long(val, where));
            else throw ParseError(where + ": unknown key '" + key + "' in [confidence]");
        } else if (section == "simulation") {
            if (key == "T") cfg.simulation.T = static_cast<int>(parse_long(val, where));
            else if (key == "seed") cfg.simulation.seed = static_cast<std::uint64_t>(parse_long(val, where));
            else throw ParseError(where + ": unknown key '" + key + "' in [simulation]");
        } else if (section == "energy") {
            if (key == "ac_pj") cfg.energy.ac_pj = parse_double(val, where);
            else if (key == "mac_pj") cfg.energy.mac_pj = parse_double(val, where);
            else throw ParseError(where + ": unknown key '" + key + "' in [energy]");
        } else {
            throw ParseError(where + ": key outside any section");
        }
    }
    cfg.thresholds.validate();
    if (cfg.simulation.T < 1) throw ConfigError(path + ": [simulation] T must be >= 1");
    if (cfg.confidence.early_steps < 0) throw ConfigError(path + ": early_steps must be >= 0");
    return cfg;
}

void save_run_config(const RunConfig& cfg, const std::string& path) {
    std::ostringstream os;
    os.precision(17);
    os << "[thresholds]\n";
    os << "regime = " << regime_name(cfg.thresholds.regime) << "\n";
    os << "alpha = " << cfg.thresholds.alpha << "\n";
    os << "k_a = " << cfg.thresholds.k_a << "\n";
    os << "k_i = " << cfg.thresholds.k_i << "\n";
    os << "C = " << cfg.thresholds.c_sensitivity << "\n";
    os << "tau_mp = " << cfg.thresholds.tau_mp << "\n";
    os << "tau_rd = " << cfg.thresholds.tau_rd << "\n";
    if (!cfg.thresholds.v_T.empty()) {
        os << "v_T = ";
        for (std::size_t i = 0; i < cfg.thresholds.v_T.size(); ++i) {
            if (i) os << ",";
            os << cfg.thresholds.v_T[i];
        }
        os << "\n";
    }
    os << "\n[confidence]\n";
    os << "enabled = " << (cfg.confidence.enabled ? "true" : "false") << "\n";
    if (!cfg.confidence.layers.empty()) {
        os << "layers = ";
        for (std::size_t i = 0; i < cfg.confidence.layers.size(); ++i) {
            if (i) os << ",";
            os << cfg.confidence.layers[i];
        }
        os << "\n";
    }
    os << "early_steps = " << cfg.confidence.early_steps << "\n";
    os << "seed = " << cfg.confidence.seed << "\n";
    os << "\n[simulation]\n";
    os << "T = " << cfg.simulation.T << "\n";
    os << "seed = " << cfg.simulation.seed << "\n";
    os << "\n[energy]\n";
    os << "ac_pj = " << cfg.energy.ac_pj << "\n";
    os << "mac_pj = " << cfg.energy.mac_pj << "\n";
    write_file(path, os.str());
}

std::string config_hash(const std::string& path) {
    const std::string bytes = read_file(path);
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

}  // namespace snnconv
