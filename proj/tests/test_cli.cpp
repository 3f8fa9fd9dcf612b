#include <doctest.h>

#include <unistd.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fgml/data.hpp"

using namespace fgml;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("fgml_cli_" + std::to_string(::getpid()) + "_" +
                std::to_string(reinterpret_cast<uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

int run(const std::string& args) {
    const std::string cmd = std::string(FGML_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

std::string tiny_synth_cfg() {
    return "data.kind = synth\n"
           "synth.classes = 3\n"
           "synth.per_class = 20\n"
           "synth.feature_dim = 8\n"
           "synth.sigma_intra = 0.2\n"
           "synth.delta_inter = 0.5\n"
           "synth.seed = 3\n"
           "train.epochs = 2\n"
           "train.batch_size = 8\n"
           "train.hidden_dim = 16\n"
           "train.embedding_dim = 8\n"
           "train.learning_rate = 0.001\n"
           "train.final_relu = false\n"
           "train.seed = 3\n";
}

std::string strip_wall(const std::string& log) {
    std::string out;
    std::istringstream is(log);
    std::string line;
    while (std::getline(is, line)) {
        const size_t wall = line.find(" wall_s=");
        if (wall != std::string::npos) line.resize(wall);
        out += line + "\n";
    }
    return out;
}

}  // namespace

TEST_CASE("gradcheck exits zero and the perturb hook trips it") {
    CHECK(run("gradcheck --trials 3 --seed 11") == 0);
    CHECK(run("gradcheck --trials 2 --seed 11 --perturb 0.01") == 3);
}

TEST_CASE("synth then inspect round-trips the header") {
    TempDir tmp;
    const fs::path cfg = tmp.path / "synth.cfg";
    write_file(cfg, "synth.classes = 4\nsynth.per_class = 10\nsynth.feature_dim = 12\n"
                    "synth.sigma_intra = 0.1\nsynth.delta_inter = 0.4\nsynth.seed = 2\n");
    CHECK(run("synth --config " + cfg.string() + " --out " + (tmp.path / "d").string()) == 0);
    CHECK(run("features inspect " + (tmp.path / "d" / "train.mfv").string()) == 0);
    const FeatureFileHeader h = inspect_features((tmp.path / "d" / "train.mfv").string());
    CHECK(h.feature_dim == 12);
    CHECK(h.class_count == 4);
    CHECK(h.sample_count == 4 * 7);

    // Corrupt magic -> data/format exit code.
    write_file(tmp.path / "bad.mfv", "JUNKJUNKJUNK");
    CHECK(run("features inspect " + (tmp.path / "bad.mfv").string()) == 2);
}

TEST_CASE("usage and config errors exit 1") {
    CHECK(run("train") == 1);  // no dataset configured
    TempDir tmp;
    write_file(tmp.path / "bad.cfg", "train.epoch = 5\n");
    CHECK(run("train --config " + (tmp.path / "bad.cfg").string()) == 1);
    CHECK(run("train --set not_an_assignment") == 1);
}

TEST_CASE("missing dataset path is a data error") {
    CHECK(run("train --set data.kind=folder --set data.root=/nonexistent_fgml") == 2);
    CHECK(run("eval --checkpoint /nonexistent_fgml.mck") == 2);
}

TEST_CASE("train / eval / ablate pipeline on a tiny synthetic dataset") {
    TempDir tmp;
    const fs::path cfg = tmp.path / "run.cfg";
    write_file(cfg, tiny_synth_cfg());
    const fs::path out1 = tmp.path / "out1";
    const fs::path out2 = tmp.path / "out2";

    CHECK(run("train --config " + cfg.string() + " --out " + out1.string()) == 0);
    CHECK(fs::exists(out1 / "checkpoint.mck"));
    CHECK(fs::exists(out1 / "last.mck"));
    CHECK(fs::exists(out1 / "trainlog.txt"));
    CHECK(fs::exists(out1 / "metrics.txt"));
    CHECK(fs::exists(out1 / "confusion.csv"));

    // Byte-identical artifacts on rerun (wall-clock fields aside).
    CHECK(run("train --config " + cfg.string() + " --out " + out2.string()) == 0);
    CHECK(slurp(out1 / "checkpoint.mck") == slurp(out2 / "checkpoint.mck"));
    CHECK(slurp(out1 / "last.mck") == slurp(out2 / "last.mck"));
    CHECK(strip_wall(slurp(out1 / "trainlog.txt")) ==
          strip_wall(slurp(out2 / "trainlog.txt")));

    CHECK(run("eval --checkpoint " + (out1 / "checkpoint.mck").string() + " --config " +
              cfg.string() + " --split test") == 0);

    // Evaluating against an explicit feature file instead of a config.
    const fs::path synth_out = tmp.path / "synthdata";
    CHECK(run("synth --config " + cfg.string() + " --out " + synth_out.string()) == 0);
    CHECK(run("eval --checkpoint " + (out1 / "checkpoint.mck").string() + " --data " +
              (synth_out / "test.mfv").string() + " --split test") == 0);

    // Loss-mode override flips exactly that key.
    const fs::path out3 = tmp.path / "out3";
    CHECK(run("train --config " + cfg.string() + " --loss-mode ce --out " +
              out3.string()) == 0);
    CHECK(slurp(out3 / "checkpoint.mck") != slurp(out1 / "checkpoint.mck"));

    const fs::path aout = tmp.path / "ablate";
    CHECK(run("ablate --config " + cfg.string() + " --out " + aout.string()) == 0);
    const std::string csv = slurp(aout / "ablation.csv");
    CHECK(csv.rfind("mode,precision,recall,f1,accuracy\n", 0) == 0);
    size_t lines = 0;
    for (char ch : csv)
        if (ch == '\n') ++lines;
    CHECK(lines == 5);
    CHECK(csv.find("\nce,") != std::string::npos);
    CHECK(csv.find("\ncenter,") != std::string::npos);
    CHECK(csv.find("\narc,") != std::string::npos);
    CHECK(csv.find("\narc+center,") != std::string::npos);

    const fs::path aout2 = tmp.path / "ablate2";
    CHECK(run("ablate --config " + cfg.string() + " --out " + aout2.string()) == 0);
    CHECK(slurp(aout / "ablation.csv") == slurp(aout2 / "ablation.csv"));
}

TEST_CASE("image training and feature extraction feed back into training") {
    TempDir tmp;
    // A small two-class ppm dataset across all three splits.
    RngStream rng(31, 3);
    for (const char* split : {"train", "validation", "test"}) {
        for (const char* cls : {"healthy", "spotted"}) {
            const fs::path dir = tmp.path / "img" / split / cls;
            fs::create_directories(dir);
            for (int i = 0; i < 3; ++i) {
                Tensor img({3, 16, 16});
                for (size_t p = 0; p < img.size(); ++p) img[p] = rng.uniform01();
                save_ppm((dir / ("img" + std::to_string(i) + ".ppm")).string(), img);
            }
        }
    }

    const fs::path cfg = tmp.path / "img.cfg";
    write_file(cfg,
               "data.kind = folder\n"
               "data.root = " + (tmp.path / "img").string() + "\n"
               "train.extractor = small-cnn\n"
               "train.epochs = 1\n"
               "train.batch_size = 4\n"
               "train.hidden_dim = 16\n"
               "train.embedding_dim = 8\n"
               "train.cnn_input_size = 16\n"
               "train.final_relu = false\n"
               "augment.target_size = 32\n");
    const fs::path out = tmp.path / "imgout";
    CHECK(run("train --config " + cfg.string() + " --out " + out.string()) == 0);

    // Extract features with the trained extractor, then train on them.
    for (const char* split : {"train", "validation", "test"}) {
        CHECK(run("features extract --checkpoint " + (out / "last.mck").string() +
                  " --data " + (tmp.path / "img").string() + " --split " + split +
                  " --out " + (tmp.path / (std::string(split) + ".mfv")).string()) == 0);
    }
    const FeatureFileHeader h = inspect_features((tmp.path / "train.mfv").string());
    CHECK(h.sample_count == 6);
    CHECK(h.feature_dim == 32);
    CHECK(h.class_count == 2);

    const fs::path fcfg = tmp.path / "feat.cfg";
    write_file(fcfg,
               "data.kind = features\n"
               "data.train = " + (tmp.path / "train.mfv").string() + "\n"
               "data.validation = " + (tmp.path / "validation.mfv").string() + "\n"
               "data.test = " + (tmp.path / "test.mfv").string() + "\n"
               "train.extractor = precomputed\n"
               "train.epochs = 1\n"
               "train.batch_size = 4\n"
               "train.hidden_dim = 16\n"
               "train.embedding_dim = 8\n"
               "train.final_relu = false\n");
    CHECK(run("train --config " + fcfg.string() + " --out " +
              (tmp.path / "featout").string()) == 0);
}
