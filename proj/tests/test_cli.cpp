#include "../tools/cli.hpp"

#include "spikeglm/io.hpp"

#include <doctest.h>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

namespace fs = std::filesystem;
using spikeglm::cli::run;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run invoke(const std::vector<std::string>& args)
{
    std::ostringstream out, err;
    const int code = run(args, out, err);
    return {code, out.str(), err.str()};
}

// Fresh scratch directory, removed on scope exit.
struct Scratch {
    fs::path dir;
    explicit Scratch(const std::string& tag)
    {
        dir = fs::temp_directory_path() / ("spikeglm_cli_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Scratch() { fs::remove_all(dir); }
    std::string operator/(const std::string& name) const { return (dir / name).string(); }
};

std::string slurp(const std::string& path)
{
    std::ifstream in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

double eval_loglik(const std::string& text)
{
    std::istringstream is(text);
    std::string key;
    double v = 0.0;
    is >> key >> v;
    REQUIRE(key == "loglik");
    return v;
}

double last_trace_ll(const std::string& path)
{
    std::istringstream is(slurp(path));
    std::string line, last;
    while (std::getline(is, line))
        if (!line.empty())
            last = line;
    const auto a = last.find(',');
    return std::stod(last.substr(a + 1, last.find(',', a + 1) - a - 1));
}

std::vector<double> trace_ll(const std::string& path)
{
    std::istringstream is(slurp(path));
    std::string line;
    std::getline(is, line);
    std::vector<double> v;
    while (std::getline(is, line)) {
        const auto a = line.find(',');
        v.push_back(std::stod(line.substr(a + 1, line.find(',', a + 1) - a - 1)));
    }
    return v;
}

// Small, quick fit arguments on a simulated train.
std::vector<std::string> quick_fit(const Scratch& s, const std::string& sub)
{
    return {"fit",          "--spikes",       s / "spikes.csv", "--truth",     s / "truth.json",
            "--out-dir",    s / sub,          "--em-max-iters", "4",           "--inner-max-iters",
            "40",           "--Q",            "10",             "--threads",   "1"};
}

}  // namespace

TEST_SUITE("cli")
{
    TEST_CASE("simulate writes a paper-fig2 train and is repeatable")
    {
        Scratch s("sim");
        auto r = invoke({"simulate", "--preset", "paper-fig2", "--seed", "7", "--out-dir", s / "a"});
        REQUIRE(r.code == 0);
        fs::copy(s / "a", s / "b");
        r = invoke({"simulate", "--preset", "paper-fig2", "--seed", "7", "--out-dir", s / "a"});
        REQUIRE(r.code == 0);
        const auto t = spikeglm::read_spike_csv(s / "a/spikes.csv");
        CHECK(t.bins() == 500);
        CHECK(t.neurons() == 6);
        CHECK(slurp(s / "a/spikes.csv") == slurp(s / "b/spikes.csv"));
        CHECK(slurp(s / "a/truth.json") == slurp(s / "b/truth.json"));
        const auto truth = spikeglm::read_model(s / "a/truth.json");
        CHECK(truth.kind == "ground-truth");
        CHECK(truth.seed == 7);
    }

    TEST_CASE("simulate from a network file with no edges")
    {
        Scratch s("spec");
        nlohmann::json spec = {{"neurons", 2},
                               {"unknowns", 1},
                               {"Q", 1},
                               {"R", 1},
                               {"M", 1},
                               {"alpha", {1.0, 1.5}},
                               {"intrinsic", {{"family", "zero"}}},
                               {"K", 80}};
        std::ofstream(s / "spec.json") << spec.dump();
        const auto r = invoke({"simulate", "--spec", s / "spec.json", "--out-dir", s.dir.string()});
        REQUIRE(r.code == 0);
        const auto t = spikeglm::read_spike_csv(s / "spikes.csv");
        CHECK(t.bins() == 80);
        CHECK(t.neurons() == 2);
        const auto truth = spikeglm::read_model(s / "truth.json");
        CHECK(truth.unknown.kernels.all_zero());
    }

    TEST_CASE("fit, eval and rebin agree with each other")
    {
        Scratch s("fit");
        REQUIRE(invoke({"simulate", "--seed", "3", "--out-dir", s.dir.string()}).code == 0);
        auto r = invoke(quick_fit(s, "f"));
        REQUIRE_MESSAGE(r.code == 0, r.err);
        CHECK(r.out.find("gain from unknowns") != std::string::npos);

        r = invoke({"eval", "--model", s / "f/model.json", "--spikes", s / "spikes.csv"});
        REQUIRE(r.code == 0);
        const double ll = eval_loglik(r.out);
        CHECK(ll == doctest::Approx(last_trace_ll(s / "f/trace.csv")).epsilon(1e-12));

        r = invoke({"eval", "--model", s / "f/baseline.json", "--spikes", s / "spikes.csv"});
        REQUIRE(r.code == 0);
        CHECK(eval_loglik(r.out) == doctest::Approx(last_trace_ll(s / "f/baseline_trace.csv")).epsilon(1e-12));

        REQUIRE(invoke({"rebin", "--spikes", s / "spikes.csv", "--factor", "1", "--out-dir", s / "rb"}).code == 0);
        CHECK(slurp(s / "rb/spikes_rebinned.csv") == slurp(s / "spikes.csv"));
        r = invoke({"eval", "--model", s / "f/model.json", "--spikes", s / "rb/spikes_rebinned.csv"});
        CHECK(eval_loglik(r.out) == ll);
    }

    TEST_CASE("fit with zero gamma reproduces the baseline trace")
    {
        Scratch s("zero");
        REQUIRE(invoke({"simulate", "--seed", "4", "--out-dir", s.dir.string()}).code == 0);
        auto args = quick_fit(s, "z");
        args.insert(args.end(), {"--gamma", "zero"});
        REQUIRE(invoke(args).code == 0);
        const auto a = trace_ll(s / "z/trace.csv");
        const auto b = trace_ll(s / "z/baseline_trace.csv");
        REQUIRE(a.size() == b.size());
        for (std::size_t n = 0; n < a.size(); ++n)
            CHECK(std::abs(a[n] - b[n]) <= 1e-10 * std::max(1.0, std::abs(b[n])));
    }

    TEST_CASE("thread count does not change the trace")
    {
        Scratch s("thr");
        REQUIRE(invoke({"simulate", "--seed", "5", "--out-dir", s.dir.string()}).code == 0);
        auto one = quick_fit(s, "t1");
        auto eight = quick_fit(s, "t8");
        eight.back() = "8";
        REQUIRE(invoke(one).code == 0);
        REQUIRE(invoke(eight).code == 0);
        CHECK(slurp(s / "t1/trace.csv") == slurp(s / "t8/trace.csv"));
        CHECK(slurp(s / "t1/baseline_trace.csv") == slurp(s / "t8/baseline_trace.csv"));
    }

    TEST_CASE("trivial model evaluates to minus C K tau")
    {
        Scratch s("triv");
        spikeglm::SpikeTrain t(20, 3, 0.05);
        spikeglm::write_spike_csv(t, s / "empty.csv");
        spikeglm::ModelDocument doc;
        doc.kind = "baseline";
        doc.theta = spikeglm::ModelTheta(3, 2, 1);
        doc.unknown = {spikeglm::UnknownKernels(3, 1, 1), spikeglm::Grid<double>(1, 20), {50.0, 1.0}};
        spikeglm::write_model(doc, s / "m.json");
        const auto r = invoke({"eval", "--model", s / "m.json", "--spikes", s / "empty.csv"});
        REQUIRE(r.code == 0);
        CHECK(eval_loglik(r.out) == doctest::Approx(-3 * 20 * 0.05).epsilon(1e-14));
    }

    TEST_CASE("config file fills options and flags win")
    {
        Scratch s("cfg");
        std::ofstream(s / "cfg.json") << R"({"seed": 9, "K": 120})";
        auto r = invoke({"simulate", "--config", s / "cfg.json", "--K", "60", "--out-dir", s.dir.string()});
        REQUIRE(r.code == 0);
        const auto t = spikeglm::read_spike_csv(s / "spikes.csv");
        CHECK(t.bins() == 60);
        CHECK(spikeglm::read_model(s / "truth.json").seed == 9);

        std::ofstream(s / "bad.json") << R"({"seeds": 9})";
        r = invoke({"simulate", "--config", s / "bad.json", "--out-dir", s.dir.string()});
        CHECK(r.code == 2);
        CHECK(r.err.find("seeds") != std::string::npos);
    }

    TEST_CASE("bad input gives a non-zero exit and a message")
    {
        Scratch s("bad");
        CHECK(invoke({}).code != 0);
        CHECK(invoke({"frobnicate"}).code != 0);
        CHECK(invoke({"fit"}).code == 2);
        CHECK(invoke({"simulate", "--preset", "nope", "--out-dir", s.dir.string()}).code != 0);
        REQUIRE(invoke({"simulate", "--seed", "2", "--K", "50", "--out-dir", s.dir.string()}).code == 0);
        auto r = invoke({"fit", "--spikes", s / "spikes.csv", "--truth", s / "truth.json", "--I", "3",
                         "--out-dir", s.dir.string()});
        CHECK(r.code == 2);
        CHECK(r.err.find("--I") != std::string::npos);
        r = invoke({"rebin", "--spikes", s / "spikes.csv", "--factor", "0", "--out-dir", s.dir.string()});
        CHECK(r.code != 0);
        std::ofstream(s / "broken.csv") << "tau=0.05\n0,1,0,0,0,-1\n";
        r = invoke({"eval", "--model", s / "truth.json", "--spikes", s / "broken.csv"});
        CHECK(r.code == 1);
        CHECK(!r.err.empty());
    }

    TEST_CASE("bin converts an event list")
    {
        Scratch s("bin");
        std::ofstream(s / "ev.csv") << "duration=1\nneuron,timestamp\n1,0.01\n1,0.02\n2,0.5\n";
        const auto r = invoke({"bin", "--events", s / "ev.csv", "--tau", "0.1", "--out-dir", s.dir.string()});
        REQUIRE_MESSAGE(r.code == 0, r.err);
        const auto t = spikeglm::read_spike_csv(s / "spikes.csv");
        CHECK(t.bins() == 10);
        CHECK(t(0, 0) == 1);
        CHECK(t(5, 1) == 1);
    }
}
