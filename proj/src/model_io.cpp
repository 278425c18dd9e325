#include "hypernn/model_io.hpp"

#include <charconv>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace hypernn {

namespace {

std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::vector<std::size_t> size_vector(const nlohmann::json& j, const std::string& key) {
    std::vector<std::size_t> out;
    for (const auto& v : j) {
        if (!v.is_number_unsigned())
            throw std::invalid_argument("model spec: \"" + key + "\" entries must be positive integers");
        out.push_back(v.get<std::size_t>());
    }
    return out;
}

std::size_t conv_rank(const std::string& type) {
    if (type == "hyperconv1d") return 1;
    if (type == "hyperconv2d") return 2;
    if (type == "hyperconv3d") return 3;
    return 0;
}

LayerSpec parse_layer(const nlohmann::json& j, std::size_t index) {
    const std::string where = "model spec layer " + std::to_string(index);
    LayerSpec spec;
    if (!j.contains("type")) throw std::invalid_argument(where + ": missing \"type\"");
    spec.type = j["type"].get<std::string>();
    const std::size_t k = conv_rank(spec.type);
    if (spec.type != "hyperdense" && k == 0)
        throw std::invalid_argument(where + ": unknown type \"" + spec.type + "\"");
    if (!j.contains("algebra")) throw std::invalid_argument(where + ": missing \"algebra\"");
    spec.algebra = j["algebra"].get<std::string>();
    spec.in_mult = j.value("in", std::size_t{1});
    spec.bias = j.value("bias", true);
    spec.activation = activation_from_string(j.value("activation", std::string("none")));
    spec.init = InitScheme::parse(j.value("init", std::string("glorot_uniform")),
                                  j.value("init_param", 0.05));
    if (spec.type == "hyperdense") {
        if (!j.contains("units")) throw std::invalid_argument(where + ": missing \"units\"");
        spec.units = j["units"].get<std::size_t>();
    } else {
        if (!j.contains("filters")) throw std::invalid_argument(where + ": missing \"filters\"");
        spec.filters = j["filters"].get<std::size_t>();
        if (!j.contains("kernel_size"))
            throw std::invalid_argument(where + ": missing \"kernel_size\"");
        spec.kernel_size = size_vector(j["kernel_size"], "kernel_size");
        if (spec.kernel_size.size() != k)
            throw std::invalid_argument(where + ": kernel_size must have " + std::to_string(k) +
                                        " entries");
        spec.strides = j.contains("strides") ? size_vector(j["strides"], "strides")
                                             : std::vector<std::size_t>(k, 1);
        if (spec.strides.size() != k)
            throw std::invalid_argument(where + ": strides must have " + std::to_string(k) +
                                        " entries");
        spec.padding = padding_from_string(j.value("padding", std::string("valid")));
    }
    return spec;
}

Algebra resolve_layer_algebra(const std::string& name_or_path, const std::string& base_dir) {
    if (name_or_path.starts_with("builtin:") || base_dir.empty())
        return resolve_algebra(name_or_path);
    const std::filesystem::path p(name_or_path);
    if (p.is_absolute()) return resolve_algebra(name_or_path);
    return resolve_algebra((std::filesystem::path(base_dir) / p).string());
}

}  // namespace

ModelSpec parse_model_spec(const std::string& text, const std::string& base_dir) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("model spec parse error: ") + e.what());
    }
    ModelSpec spec;
    if (!j.contains("input_shape") || !j["input_shape"].is_array())
        throw std::invalid_argument("model spec: missing \"input_shape\" array");
    spec.input_shape = size_vector(j["input_shape"], "input_shape");
    if (!j.contains("layers") || !j["layers"].is_array() || j["layers"].empty())
        throw std::invalid_argument("model spec: missing or empty \"layers\" array");
    for (std::size_t i = 0; i < j["layers"].size(); ++i)
        spec.layers.push_back(parse_layer(j["layers"][i], i));

    // Chain validation happens in build_model; run it now so load_model_spec
    // is total (either a valid spec or a diagnostic).
    build_model(spec, base_dir);
    return spec;
}

ModelSpec load_model_spec(const std::string& path) {
    return parse_model_spec(read_file(path),
                            std::filesystem::path(path).parent_path().string());
}

Model build_model(const ModelSpec& spec, const std::string& base_dir) {
    std::vector<Layer> layers;
    for (const LayerSpec& ls : spec.layers) {
        Algebra alg = resolve_layer_algebra(ls.algebra, base_dir);
        if (ls.type == "hyperdense") {
            layers.emplace_back(
                HyperDenseLayer(std::move(alg), ls.in_mult, ls.units, ls.bias, ls.activation));
        } else {
            layers.emplace_back(HyperConvLayer(std::move(alg), ls.kernel_size, ls.in_mult,
                                               ls.filters, ls.strides, ls.padding, ls.bias,
                                               ls.activation));
        }
    }
    return Model(spec.input_shape, std::move(layers));
}

void initialize_model(Model& model, const ModelSpec& spec, std::uint64_t seed) {
    if (model.layers().size() != spec.layers.size())
        throw std::invalid_argument("initialize_model: layer count mismatch");
    for (std::size_t li = 0; li < model.layers().size(); ++li) {
        const std::uint64_t s = seed + 0x9e3779b97f4a7c15ull * (li + 1);
        std::visit([&](auto& l) { l.initialize(spec.layers[li].init, s); }, model.layers()[li]);
    }
}

TrainSpec parse_train_spec(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("train spec parse error: ") + e.what());
    }
    TrainSpec spec;
    spec.epochs = j.value("epochs", spec.epochs);
    spec.batch_size = j.value("batch_size", spec.batch_size);
    spec.learning_rate = j.value("learning_rate", spec.learning_rate);
    spec.momentum = j.value("momentum", spec.momentum);
    spec.seed = j.value("seed", spec.seed);
    spec.loss = loss_from_string(j.value("loss", std::string("mse")));
    spec.shuffle = j.value("shuffle", spec.shuffle);
    return spec;
}

TrainSpec load_train_spec(const std::string& path) { return parse_train_spec(read_file(path)); }

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    cells.push_back(cur);
    return cells;
}

double parse_cell(const std::string& cell, std::size_t row, std::size_t col) {
    std::string s = cell;
    // Trim ASCII whitespace only.
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    if (b == std::string::npos)
        throw std::invalid_argument("csv: empty cell at row " + std::to_string(row) + ", column " +
                                    std::to_string(col));
    s = s.substr(b, e - b + 1);
    double value = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    const auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc{} || res.ptr != last)
        throw std::invalid_argument("csv: non-numeric cell \"" + cell + "\" at row " +
                                    std::to_string(row) + ", column " + std::to_string(col));
    return value;
}

}  // namespace

Dataset load_dataset_csv(const std::string& path, const std::vector<std::string>& feature_cols,
                         const std::vector<std::string>& target_cols) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open csv: " + path);

    std::string line;
    if (!std::getline(is, line)) throw std::invalid_argument("csv: empty file: " + path);
    const auto header = split_csv_line(line);

    auto column_index = [&](const std::string& name) {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw std::invalid_argument("csv: column \"" + name + "\" not found in header of " + path);
    };
    std::vector<std::size_t> fidx, tidx;
    for (const auto& c : feature_cols) fidx.push_back(column_index(c));
    for (const auto& c : target_cols) tidx.push_back(column_index(c));
    if (fidx.empty() || tidx.empty())
        throw std::invalid_argument("csv: need at least one feature and one target column");

    std::vector<double> fdata, tdata;
    std::size_t rows = 0, rownum = 1;
    while (std::getline(is, line)) {
        ++rownum;
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw std::invalid_argument("csv: ragged row " + std::to_string(rownum) + " has " +
                                        std::to_string(cells.size()) + " cells, header has " +
                                        std::to_string(header.size()));
        for (std::size_t i : fidx) fdata.push_back(parse_cell(cells[i], rownum, i + 1));
        for (std::size_t i : tidx) tdata.push_back(parse_cell(cells[i], rownum, i + 1));
        ++rows;
    }
    if (rows == 0) throw std::invalid_argument("csv: no data rows in " + path);

    Dataset ds;
    ds.features = Tensor::from_data({rows, fidx.size()}, std::move(fdata));
    ds.targets = Tensor::from_data({rows, tidx.size()}, std::move(tdata));
    return ds;
}

Dataset load_dataset_binding(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("data binding parse error: ") + e.what());
    }
    if (!j.contains("csv")) throw std::invalid_argument("data binding: missing \"csv\" path");
    std::filesystem::path csv = j["csv"].get<std::string>();
    if (csv.is_relative()) csv = std::filesystem::path(path).parent_path() / csv;

    auto names = [](const nlohmann::json& arr) {
        std::vector<std::string> out;
        for (const auto& v : arr) out.push_back(v.get<std::string>());
        return out;
    };
    if (!j.contains("feature_cols") || !j.contains("target_cols"))
        throw std::invalid_argument("data binding: missing \"feature_cols\" or \"target_cols\"");
    Dataset ds = load_dataset_csv(csv.string(), names(j["feature_cols"]), names(j["target_cols"]));
    if (j.contains("reshape_to")) ds.reshape_to = size_vector(j["reshape_to"], "reshape_to");
    return ds;
}

namespace {

constexpr char kCheckpointMagic[4] = {'H', 'X', 'C', 'K'};
constexpr std::uint32_t kCheckpointVersion = 1;

nlohmann::json algebra_json(const Algebra& alg) {
    nlohmann::json table = nlohmann::json::array();
    for (std::size_t i = 0; i < alg.dim(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t j = 0; j < alg.dim(); ++j) {
            nlohmann::json col = nlohmann::json::array();
            for (std::size_t k = 0; k < alg.dim(); ++k) col.push_back(alg.coeff(i, j, k));
            row.push_back(col);
        }
        table.push_back(row);
    }
    return nlohmann::json{{"name", alg.name()}, {"dim", alg.dim()}, {"table", table}};
}

Algebra algebra_from_json(const nlohmann::json& j) {
    const std::size_t dim = j.at("dim").get<std::size_t>();
    Tensor table = Tensor::zeros({dim, dim, dim});
    const auto& tab = j.at("table");
    for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t jj = 0; jj < dim; ++jj)
            for (std::size_t k = 0; k < dim; ++k)
                table.at({i, jj, k}) = tab[i][jj][k].get<double>();
    return Algebra(j.value("name", "unnamed"), dim, std::move(table));
}

void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(buf), 4);
}

void write_u64(std::ostream& os, std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint32_t read_u32(std::istream& is) {
    unsigned char buf[4];
    is.read(reinterpret_cast<char*>(buf), 4);
    if (!is) throw std::runtime_error("checkpoint: truncated header");
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | buf[i];
    return v;
}

std::uint64_t read_u64(std::istream& is) {
    unsigned char buf[8];
    is.read(reinterpret_cast<char*>(buf), 8);
    if (!is) throw std::runtime_error("checkpoint: truncated header");
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | buf[i];
    return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& model) {
    nlohmann::json layers = nlohmann::json::array();
    for (const Layer& l : model.layers()) {
        if (std::holds_alternative<HyperDenseLayer>(l)) {
            const auto& d = std::get<HyperDenseLayer>(l);
            layers.push_back(nlohmann::json{{"type", "hyperdense"},
                                            {"algebra", algebra_json(d.algebra())},
                                            {"in", d.in_mult()},
                                            {"units", d.units()},
                                            {"bias", d.use_bias()},
                                            {"activation", to_string(d.activation())}});
        } else {
            const auto& c = std::get<HyperConvLayer>(l);
            layers.push_back(nlohmann::json{{"type", "hyperconv" + std::to_string(c.spatial_rank()) + "d"},
                                            {"algebra", algebra_json(c.algebra())},
                                            {"in", c.in_mult()},
                                            {"filters", c.filters()},
                                            {"kernel_size", c.kernel_size()},
                                            {"strides", c.strides()},
                                            {"padding", to_string(c.padding())},
                                            {"bias", c.use_bias()},
                                            {"activation", to_string(c.activation())}});
        }
    }
    const nlohmann::json meta{{"input_shape", model.input_shape()}, {"layers", layers}};
    const std::string meta_str = meta.dump();

    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    os.write(kCheckpointMagic, 4);
    write_u32(os, kCheckpointVersion);
    write_u64(os, meta_str.size());
    os.write(meta_str.data(), static_cast<std::streamsize>(meta_str.size()));
    for (const Layer& l : model.layers()) {
        std::visit(
            [&](const auto& layer) {
                save_tensor(os, layer.kernel());
                save_tensor(os, layer.bias());
            },
            l);
    }
    if (!os) throw std::runtime_error("checkpoint write failed: " + path);
}

Model load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kCheckpointMagic, 4) != 0)
        throw std::runtime_error("checkpoint: bad magic (corrupt or not a checkpoint): " + path);
    const std::uint32_t version = read_u32(is);
    if (version != kCheckpointVersion)
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
    const std::uint64_t meta_len = read_u64(is);
    std::string meta_str(meta_len, '\0');
    is.read(meta_str.data(), static_cast<std::streamsize>(meta_len));
    if (!is) throw std::runtime_error("checkpoint: truncated metadata: " + path);

    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(meta_str);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error(std::string("checkpoint: corrupt metadata: ") + e.what());
    }

    std::vector<Layer> layers;
    for (const auto& lj : meta.at("layers")) {
        Algebra alg = algebra_from_json(lj.at("algebra"));
        const std::string type = lj.at("type").get<std::string>();
        const Activation act = activation_from_string(lj.at("activation").get<std::string>());
        if (type == "hyperdense") {
            layers.emplace_back(HyperDenseLayer(std::move(alg), lj.at("in").get<std::size_t>(),
                                                lj.at("units").get<std::size_t>(),
                                                lj.at("bias").get<bool>(), act));
        } else {
            layers.emplace_back(HyperConvLayer(
                std::move(alg), lj.at("kernel_size").get<std::vector<std::size_t>>(),
                lj.at("in").get<std::size_t>(), lj.at("filters").get<std::size_t>(),
                lj.at("strides").get<std::vector<std::size_t>>(),
                padding_from_string(lj.at("padding").get<std::string>()),
                lj.at("bias").get<bool>(), act));
        }
    }
    Model model(meta.at("input_shape").get<std::vector<std::size_t>>(), std::move(layers));
    for (Layer& l : model.layers()) {
        Tensor kernel = load_tensor(is);
        Tensor bias = load_tensor(is);
        std::visit(
            [&](auto& layer) {
                layer.set_kernel(std::move(kernel));
                layer.set_bias(std::move(bias));
            },
            l);
    }
    return model;
}

}  // namespace hypernn
