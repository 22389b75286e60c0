#include "oracles.hpp"

#include "spikeglm/estimator.hpp"
#include "spikeglm/io.hpp"
#include "spikeglm/model.hpp"
#include "spikeglm/simulator.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

using namespace spikeglm;

namespace {

std::string spike_text(const SpikeTrain& t)
{
    std::ostringstream os;
    write_spike_csv(t, os);
    return os.str();
}

SpikeTrain spikes_from(const std::string& text)
{
    std::istringstream is(text);
    return read_spike_csv(is);
}

EventList events_from(const std::string& text)
{
    std::istringstream is(text);
    return read_event_csv(is);
}

ModelDocument small_fit()
{
    const auto train = oracle::random_train(40, 2, 0.3, 21);
    const auto g = oracle::random_kernels(2, 1, 2, 22);
    FitConfig cfg;
    cfg.Q = 2;
    cfg.R = 1;
    cfg.M = 2;
    cfg.I = 1;
    cfg.em_max_iters = 5;
    cfg.threads = 1;
    const auto prior = zero_mean_prior(50.0);
    auto fit = em_fit(train, g, prior, cfg);
    ModelDocument doc;
    doc.kind = "fit";
    doc.theta = fit.theta;
    doc.unknown = {g, fit.delta_u, prior};
    doc.report = fit.report;
    doc.config = {{"note", "test"}, {"l", 1.0}};
    doc.seed = 1;
    return doc;
}

}  // namespace

TEST_SUITE("io")
{
    TEST_CASE("events in one bin: count mode sums, binary mode clips")
    {
        EventList ev;
        ev.duration = 0.2;
        ev.neurons = 1;
        ev.events = {{0, 0.051}, {0, 0.06}, {0, 0.099}};
        const auto cnt = bin_events(ev, 0.05, BinMode::count);
        CHECK(cnt.train.bins() == 4);
        CHECK(cnt.train(1, 0) == 3);
        CHECK(cnt.clipped == 0);
        const auto bin = bin_events(ev, 0.05, BinMode::binary);
        CHECK(bin.train(1, 0) == 1);
        CHECK(bin.clipped == 2);
    }

    TEST_CASE("empty event list gives an all-zero train")
    {
        EventList ev;
        ev.duration = 1.0;
        ev.neurons = 3;
        const auto b = bin_events(ev, 0.1, BinMode::binary);
        CHECK(b.train.bins() == 10);
        CHECK(b.train.neurons() == 3);
        CHECK(b.train.total() == 0);
    }

    TEST_CASE("halving tau keeps counts and doubles the bin count")
    {
        EventList ev;
        ev.duration = 2.0;
        ev.neurons = 2;
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> u(0.0, 2.0);
        for (int n = 0; n < 200; ++n)
            ev.events.push_back({static_cast<std::size_t>(n % 2), u(rng)});
        std::sort(ev.events.begin(), ev.events.end(),
                  [](const Event& a, const Event& b) { return a.time < b.time; });
        const auto a = bin_events(ev, 0.1, BinMode::count);
        const auto b = bin_events(ev, 0.05, BinMode::count);
        CHECK(b.train.bins() == 2 * a.train.bins());
        CHECK(a.train.total() == 200);
        CHECK(b.train.total() == 200);
        CHECK(rebin(b.train, 2).counts() == a.train.counts());
    }

    TEST_CASE("bin edges and invalid input")
    {
        EventList ev;
        ev.duration = 1.0;
        ev.neurons = 1;
        ev.events = {{0, 0.0}, {0, 0.5}, {0, 0.999}};
        const auto b = bin_events(ev, 0.5, BinMode::count);
        CHECK(b.train.bins() == 2);
        CHECK(b.train(0, 0) == 1);
        CHECK(b.train(1, 0) == 2);
        CHECK_THROWS_AS(bin_events(ev, 0.0, BinMode::count), ArgumentError);
        ev.events = {{0, 1.0}};
        CHECK_THROWS_WITH_AS(bin_events(ev, 0.5, BinMode::count), doctest::Contains("outside"), FormatError);
        ev.events = {{0, 0.5}, {0, 0.2}};
        CHECK_THROWS_WITH_AS(bin_events(ev, 0.1, BinMode::count), doctest::Contains("event 2"), FormatError);
    }

    TEST_CASE("rebin: identity, full collapse, conservation")
    {
        const auto t = oracle::random_train(37, 3, 0.4, 5, 0.01, 3);
        CHECK(rebin(t, 1) == t);
        const auto all = rebin(t, 37);
        CHECK(all.bins() == 1);
        for (std::size_t c = 0; c < 3; ++c)
            CHECK(all(0, c) == t.total(c));
        const auto r = rebin(t, 5);
        CHECK(r.bins() == 8);
        CHECK(r.partial_tail());
        CHECK(r.tau() == doctest::Approx(0.05));
        for (std::size_t c = 0; c < 3; ++c)
            CHECK(r.total(c) == t.total(c));
        CHECK(r(7, 0) == t(35, 0) + t(36, 0));
        CHECK(!rebin(t, 37).partial_tail());
        CHECK_THROWS_AS(rebin(t, 0), ArgumentError);
    }

    TEST_CASE("spike csv round trip")
    {
        auto t = oracle::random_train(30, 4, 0.3, 6, 0.002, 4);
        CHECK(spikes_from(spike_text(t)) == t);
        SpikeTrain s(3, 2, 0.1, 2.5);
        s.set(1, 1, 2);
        s.set_partial_tail(true);
        const auto text = spike_text(s);
        CHECK(text.rfind("tau=0.1,start=2.5,partial_tail=1\n", 0) == 0);
        CHECK(spikes_from(text) == s);
    }

    TEST_CASE("spike csv errors name the line")
    {
        CHECK_THROWS_WITH_AS(spikes_from("tau=0.05\n0,1\n1,-1\n"), doctest::Contains("line 3"), FormatError);
        CHECK_THROWS_WITH_AS(spikes_from("tau=0.05\n0,1\n1\n"), doctest::Contains("line 3"), FormatError);
        CHECK_THROWS_AS(spikes_from("tau=0.05\n0,x\n"), FormatError);
        CHECK_THROWS_AS(spikes_from("tau=-1\n0\n"), FormatError);
        CHECK_THROWS_AS(spikes_from(""), FormatError);
        CHECK_THROWS_AS(spikes_from("tau=0.05\n"), FormatError);
    }

    TEST_CASE("simulated train is byte-stable through write, read, write")
    {
        const auto ex = simulate_experiment("paper-fig2", 1);
        const auto first = spike_text(ex.generation.train);
        const auto back = spikes_from(first);
        CHECK(back.bins() == 500);
        CHECK(back.neurons() == 6);
        CHECK(spike_text(back) == first);
    }

    TEST_CASE("event csv round trip and errors")
    {
        const auto ev = events_from("duration=2\nneuron,timestamp\n1,0.1\n3,0.25\n2,1.5\n");
        CHECK(ev.neurons == 3);
        CHECK(ev.duration == 2.0);
        REQUIRE(ev.events.size() == 3);
        CHECK(ev.events[1].neuron == 2);
        CHECK(ev.events[1].time == 0.25);
        std::ostringstream os;
        write_event_csv(ev, os);
        const auto again = events_from(os.str());
        CHECK(again.neurons == ev.neurons);
        CHECK(again.events.size() == ev.events.size());
        for (std::size_t n = 0; n < ev.events.size(); ++n) {
            CHECK(again.events[n].neuron == ev.events[n].neuron);
            CHECK(again.events[n].time == ev.events[n].time);
        }

        CHECK_THROWS_WITH_AS(events_from("duration=2\n1,0.5\n1,0.1\n"), doctest::Contains("line 3"), FormatError);
        CHECK_THROWS_WITH_AS(events_from("duration=2\n1,0.5\n0,0.9\n"), doctest::Contains("line 3"), FormatError);
        CHECK_THROWS_WITH_AS(events_from("duration=1\n1,5\n"), doctest::Contains("line 2"), FormatError);
        CHECK_THROWS_AS(events_from("duration=1\n"), FormatError);
        CHECK(events_from("duration=1,neurons=4\n").neurons == 4);
    }

    TEST_CASE("model document round trip")
    {
        const auto doc = small_fit();
        const auto j = model_to_json(doc);
        const auto back = model_from_json(j);
        CHECK(back == doc);
        CHECK(model_from_json(nlohmann::json::parse(j.dump())) == doc);
    }

    TEST_CASE("model document errors name the field")
    {
        const auto j = model_to_json(small_fit());
        auto bad = j;
        bad["theta"]["alpha"] = {1.0, 2.0, 3.0};
        CHECK_THROWS_WITH_AS(model_from_json(bad), doctest::Contains("theta.alpha"), FormatError);
        bad = j;
        bad["unknown"]["delta_u"][0].erase(0);
        CHECK_THROWS_WITH_AS(model_from_json(bad), doctest::Contains("unknown.delta_u"), FormatError);
        bad = j;
        bad["extra"] = true;
        CHECK_THROWS_WITH_AS(model_from_json(bad), doctest::Contains("extra"), FormatError);
        bad = j;
        bad["theta"]["mystery"] = 0;
        CHECK_THROWS_WITH_AS(model_from_json(bad), doctest::Contains("theta.mystery"), FormatError);
        bad = j;
        bad["format"] = "other";
        CHECK_THROWS_AS(model_from_json(bad), FormatError);
    }

    TEST_CASE("trace csv keeps full precision")
    {
        FitReport r;
        r.ll_trace = {-1234.5678901234567, 0.1 + 0.2, -1e-300};
        r.penalized_trace = {1.0 / 3.0, 2.0 / 3.0, -7.0};
        std::ostringstream os;
        write_trace_csv(r, os);
        std::istringstream is(os.str());
        std::string line;
        std::getline(is, line);
        CHECK(line == "iter,loglik,penalized");
        for (std::size_t n = 0; n < 3; ++n) {
            REQUIRE(std::getline(is, line));
            const auto a = line.find(','), b = line.rfind(',');
            CHECK(std::stoul(line.substr(0, a)) == n);
            CHECK(std::stod(line.substr(a + 1, b - a - 1)) == r.ll_trace[n]);
            CHECK(std::stod(line.substr(b + 1)) == r.penalized_trace[n]);
        }
    }

    TEST_CASE("format_double")
    {
        CHECK(format_double(0.1) == "0.1");
        CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
        CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
    }
}
