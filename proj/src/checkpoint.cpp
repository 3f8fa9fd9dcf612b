#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>

#include "fgml/error.hpp"
#include "fgml/train.hpp"

namespace fgml {

namespace {

constexpr uint32_t kCheckpointVersion = 1;

// ---- byte-level writer/reader (little-endian) ----

struct Writer {
    std::vector<uint8_t> bytes;

    void u32(uint32_t v) {
        bytes.push_back(static_cast<uint8_t>(v));
        bytes.push_back(static_cast<uint8_t>(v >> 8));
        bytes.push_back(static_cast<uint8_t>(v >> 16));
        bytes.push_back(static_cast<uint8_t>(v >> 24));
    }
    void f64(double v) {
        uint64_t bits;
        std::memcpy(&bits, &v, 8);
        for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<uint8_t>(bits >> (8 * i)));
    }
    void raw(const void* data, size_t n) {
        const uint8_t* p = static_cast<const uint8_t*>(data);
        bytes.insert(bytes.end(), p, p + n);
    }
    void str(const std::string& s) {
        u32(static_cast<uint32_t>(s.size()));
        raw(s.data(), s.size());
    }
    void tensor(const std::string& name, const Tensor& t) {
        str(name);
        u32(static_cast<uint32_t>(t.rank()));
        for (size_t e : t.shape()) u32(static_cast<uint32_t>(e));
        for (double v : t.values()) f64(v);
    }
    void scalar(const std::string& name, double v) {
        tensor(name, Tensor({1}, {v}));
    }
};

struct Reader {
    std::span<const uint8_t> bytes;
    size_t pos = 0;

    void need(size_t n, const char* what) {
        if (pos + n > bytes.size())
            raise(ErrorKind::Format, std::string("checkpoint truncated at offset ") +
                                         std::to_string(pos) + " while reading " + what);
    }
    uint32_t u32(const char* what) {
        need(4, what);
        uint32_t v = static_cast<uint32_t>(bytes[pos]) |
                     (static_cast<uint32_t>(bytes[pos + 1]) << 8) |
                     (static_cast<uint32_t>(bytes[pos + 2]) << 16) |
                     (static_cast<uint32_t>(bytes[pos + 3]) << 24);
        pos += 4;
        return v;
    }
    double f64(const char* what) {
        need(8, what);
        uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<uint64_t>(bytes[pos + i]) << (8 * i);
        pos += 8;
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    std::string str(const char* what) {
        const uint32_t len = u32(what);
        need(len, what);
        std::string s(reinterpret_cast<const char*>(bytes.data() + pos), len);
        pos += len;
        return s;
    }
    Tensor tensor(const char* what) {
        const uint32_t rank = u32(what);
        if (rank > 8) raise(ErrorKind::Format, "checkpoint tensor rank out of range");
        std::vector<size_t> shape(rank);
        size_t count = 1;
        for (uint32_t i = 0; i < rank; ++i) {
            shape[i] = u32(what);
            if (shape[i] == 0) raise(ErrorKind::Format, "checkpoint tensor extent zero");
            // Overflow-safe cap: the payload must fit in the remaining bytes.
            const size_t max_count = (bytes.size() - pos) / 8;
            if (shape[i] > max_count / count)
                raise(ErrorKind::Format,
                      std::string("checkpoint tensor larger than file: ") + what);
            count *= shape[i];
        }
        std::vector<double> values(count);
        need(8 * count, what);
        for (size_t i = 0; i < count; ++i) values[i] = f64(what);
        return Tensor(std::move(shape), std::move(values));
    }
};

// ---- config blob (key=value text, hexfloat doubles for exact roundtrip) ----

std::string fmt_f(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%a", v);
    return buf;
}

std::string config_blob(const TrainConfig& c) {
    std::string s;
    auto put = [&s](const std::string& key, const std::string& value) {
        s += key;
        s += '=';
        s += value;
        s += '\n';
    };
    put("loss_mode", loss_mode_name(c.loss_mode));
    put("epochs", std::to_string(c.epochs));
    put("batch_size", std::to_string(c.batch_size));
    put("learning_rate", fmt_f(c.learning_rate));
    put("weight_decay", fmt_f(c.weight_decay));
    put("dropout", fmt_f(c.dropout));
    put("scale", fmt_f(c.scale));
    put("margin", fmt_f(c.margin));
    put("alpha", fmt_f(c.alpha));
    put("center_beta", fmt_f(c.center_beta));
    put("seed", std::to_string(c.seed));
    put("extractor", extractor_kind_name(c.extractor));
    put("embedding_dim", std::to_string(c.embedding_dim));
    put("hidden_dim", std::to_string(c.hidden_dim));
    put("eval_every", std::to_string(c.eval_every));
    put("final_relu", c.final_relu ? "1" : "0");
    put("adam_beta1", fmt_f(c.adam_beta1));
    put("adam_beta2", fmt_f(c.adam_beta2));
    put("adam_eps", fmt_f(c.adam_eps));
    put("decay_biases", c.decay_biases ? "1" : "0");
    put("cnn_input_size", std::to_string(c.cnn_input_size));
    put("augment.flip_prob", fmt_f(c.augment.flip_prob));
    put("augment.rotation_degrees", fmt_f(c.augment.rotation_degrees));
    put("augment.jitter_factor", fmt_f(c.augment.jitter_factor));
    put("augment.translate_fraction", fmt_f(c.augment.translate_fraction));
    put("augment.target_size", std::to_string(c.augment.target_size));
    for (int i = 0; i < 3; ++i)
        put("augment.mean" + std::to_string(i), fmt_f(c.augment.mean[i]));
    for (int i = 0; i < 3; ++i)
        put("augment.std" + std::to_string(i), fmt_f(c.augment.std_dev[i]));
    return s;
}

TrainConfig parse_config_blob(const std::string& blob) {
    std::map<std::string, std::string> kv;
    size_t start = 0;
    while (start < blob.size()) {
        size_t end = blob.find('\n', start);
        if (end == std::string::npos) end = blob.size();
        const std::string line = blob.substr(start, end - start);
        start = end + 1;
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            raise(ErrorKind::Format, "checkpoint config line without '=': " + line);
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    auto get = [&kv](const std::string& key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end())
            raise(ErrorKind::Format, "checkpoint config missing key " + key);
        return it->second;
    };
    auto get_f = [&get](const std::string& key) { return std::strtod(get(key).c_str(), nullptr); };
    auto get_u = [&get](const std::string& key) { return std::strtoull(get(key).c_str(), nullptr, 10); };

    TrainConfig c;
    c.loss_mode = parse_loss_mode(get("loss_mode"));
    c.epochs = get_u("epochs");
    c.batch_size = get_u("batch_size");
    c.learning_rate = get_f("learning_rate");
    c.weight_decay = get_f("weight_decay");
    c.dropout = get_f("dropout");
    c.scale = get_f("scale");
    c.margin = get_f("margin");
    c.alpha = get_f("alpha");
    c.center_beta = get_f("center_beta");
    c.seed = get_u("seed");
    c.extractor = parse_extractor_kind(get("extractor"));
    c.embedding_dim = get_u("embedding_dim");
    c.hidden_dim = get_u("hidden_dim");
    c.eval_every = get_u("eval_every");
    c.final_relu = get("final_relu") == "1";
    c.adam_beta1 = get_f("adam_beta1");
    c.adam_beta2 = get_f("adam_beta2");
    c.adam_eps = get_f("adam_eps");
    c.decay_biases = get("decay_biases") == "1";
    c.cnn_input_size = get_u("cnn_input_size");
    c.augment.flip_prob = get_f("augment.flip_prob");
    c.augment.rotation_degrees = get_f("augment.rotation_degrees");
    c.augment.jitter_factor = get_f("augment.jitter_factor");
    c.augment.translate_fraction = get_f("augment.translate_fraction");
    c.augment.target_size = get_u("augment.target_size");
    for (int i = 0; i < 3; ++i) c.augment.mean[i] = get_f("augment.mean" + std::to_string(i));
    for (int i = 0; i < 3; ++i) c.augment.std_dev[i] = get_f("augment.std" + std::to_string(i));
    return c;
}

std::vector<std::string> active_parameter_names(const Checkpoint& ckpt) {
    std::vector<std::string> names;
    for (const auto& [name, tensor] : named_model_tensors(ckpt.model)) {
        (void)tensor;
        const bool classifier = name.rfind("classifier.", 0) == 0;
        const bool arc = name == "arc.weights";
        if (classifier && ckpt.config.loss_mode != LossMode::CrossEntropy) continue;
        if (arc && ckpt.config.loss_mode != LossMode::Arc &&
            ckpt.config.loss_mode != LossMode::ArcCenter)
            continue;
        names.push_back(name);
    }
    return names;
}

}  // namespace

std::vector<uint8_t> serialize_checkpoint(const Checkpoint& ckpt) {
    Writer w;
    w.raw("MCK1", 4);
    w.u32(kCheckpointVersion);
    w.str(config_blob(ckpt.config));
    w.u32(static_cast<uint32_t>(ckpt.class_names.size()));
    for (const std::string& name : ckpt.class_names) w.str(name);

    const auto model_tensors = named_model_tensors(ckpt.model);
    const auto opt_names = active_parameter_names(ckpt);
    if (ckpt.opt.m.size() != opt_names.size())
        raise(ErrorKind::Format, "optimizer state does not match active parameter set");

    const uint32_t tensor_count =
        static_cast<uint32_t>(model_tensors.size() + 1 + 2 * opt_names.size() + 4);
    w.u32(tensor_count);
    for (const auto& [name, tensor] : model_tensors) w.tensor(name, *tensor);
    w.tensor("centers", ckpt.centers.centers);
    for (size_t i = 0; i < opt_names.size(); ++i) {
        w.tensor("opt.m." + opt_names[i], ckpt.opt.m[i]);
        w.tensor("opt.v." + opt_names[i], ckpt.opt.v[i]);
    }
    w.scalar("meta.step", static_cast<double>(ckpt.opt.step));
    w.scalar("meta.epoch", static_cast<double>(ckpt.epoch));
    w.scalar("meta.best_val_acc", ckpt.best_val_accuracy);
    w.scalar("meta.best_epoch", static_cast<double>(ckpt.best_epoch));
    return std::move(w.bytes);
}

Checkpoint deserialize_checkpoint(std::span<const uint8_t> bytes) {
    Reader r{bytes};
    r.need(4, "magic");
    if (std::memcmp(bytes.data(), "MCK1", 4) != 0)
        raise(ErrorKind::Format, "bad checkpoint magic, expected MCK1");
    r.pos = 4;
    const uint32_t version = r.u32("version");
    if (version != kCheckpointVersion)
        raise(ErrorKind::Version, "unsupported checkpoint version " + std::to_string(version) +
                                      ", expected " + std::to_string(kCheckpointVersion));

    Checkpoint ckpt;
    ckpt.version = version;
    ckpt.config = parse_config_blob(r.str("config blob"));

    const uint32_t class_count = r.u32("class count");
    for (uint32_t i = 0; i < class_count; ++i)
        ckpt.class_names.push_back(r.str("class name"));

    const uint32_t tensor_count = r.u32("tensor count");
    std::map<std::string, Tensor> sections;
    for (uint32_t i = 0; i < tensor_count; ++i) {
        std::string name = r.str("tensor name");
        Tensor t = r.tensor(name.c_str());
        sections.emplace(std::move(name), std::move(t));
    }
    if (r.pos != bytes.size())
        raise(ErrorKind::Format, "checkpoint has " + std::to_string(bytes.size() - r.pos) +
                                     " trailing bytes at offset " + std::to_string(r.pos));

    auto take = [&sections](const std::string& name) -> Tensor {
        auto it = sections.find(name);
        if (it == sections.end())
            raise(ErrorKind::Format, "checkpoint missing tensor section " + name);
        Tensor t = std::move(it->second);
        sections.erase(it);
        return t;
    };

    ckpt.model.extractor.kind = ckpt.config.extractor;
    if (ckpt.config.extractor == ExtractorKind::SmallCnn) {
        ckpt.model.extractor.cnn.conv1 = {take("cnn.conv1.weight"), take("cnn.conv1.bias")};
        ckpt.model.extractor.cnn.conv2 = {take("cnn.conv2.weight"), take("cnn.conv2.bias")};
        ckpt.model.extractor.cnn.conv3 = {take("cnn.conv3.weight"), take("cnn.conv3.bias")};
    }
    ckpt.model.mlp.w1 = take("mlp.w1");
    ckpt.model.mlp.b1 = take("mlp.b1");
    ckpt.model.mlp.w2 = take("mlp.w2");
    ckpt.model.mlp.b2 = take("mlp.b2");
    ckpt.model.mlp.dropout = ckpt.config.dropout;
    ckpt.model.mlp.final_relu = ckpt.config.final_relu;
    ckpt.model.classifier.wc = take("classifier.wc");
    ckpt.model.classifier.bc = take("classifier.bc");
    ckpt.model.arc_weights = take("arc.weights");
    ckpt.model.extractor.feature_dim = ckpt.model.mlp.w1.extent(1);

    if (ckpt.model.mlp.w1.extent(0) != ckpt.config.hidden_dim ||
        ckpt.model.mlp.w2.extent(0) != ckpt.config.embedding_dim)
        raise(ErrorKind::Format, "checkpoint tensor shapes disagree with its config");

    ckpt.centers.centers = take("centers");
    ckpt.centers.update_rate = ckpt.config.center_beta;
    if (ckpt.centers.class_count() != class_count)
        raise(ErrorKind::Format, "checkpoint centers disagree with class names");

    ckpt.opt.config = {ckpt.config.learning_rate, ckpt.config.adam_beta1,
                       ckpt.config.adam_beta2, ckpt.config.adam_eps,
                       ckpt.config.weight_decay};
    for (const std::string& name : active_parameter_names(ckpt)) {
        ckpt.opt.m.push_back(take("opt.m." + name));
        ckpt.opt.v.push_back(take("opt.v." + name));
    }
    ckpt.opt.step = static_cast<uint64_t>(take("meta.step")[0]);
    ckpt.epoch = static_cast<size_t>(take("meta.epoch")[0]);
    ckpt.best_val_accuracy = take("meta.best_val_acc")[0];
    ckpt.best_epoch = static_cast<size_t>(take("meta.best_epoch")[0]);
    return ckpt;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    const std::vector<uint8_t> bytes = serialize_checkpoint(ckpt);
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(ErrorKind::Io, "cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) raise(ErrorKind::Io, "write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorKind::Io, "cannot open " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    return deserialize_checkpoint(bytes);
}

}  // namespace fgml
