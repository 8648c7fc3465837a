// Command-line front end: verify abstractions, realize single tuples, run
// the learning loop, and summarize run directories.

#include "rarlkit/envs.hpp"
#include "rarlkit/rarl.hpp"
#include "rarlkit/realizer.hpp"
#include "rarlkit/solve.hpp"

#include <CLI11.hpp>
#ifdef _OPENMP
#include <omp.h>
#endif

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace rarlkit;

namespace {

constexpr int kExitOk = 0, kExitOther = 1, kExitParse = 2, kExitInfeasible = 3, kExitCap = 4;

struct Loaded {
    GroundMdp mdp;
    Mapping mapping;
    SecondOrderMdp abstract_model;
    bool has_abstract = false;
};

Loaded load_env_and_abs(const std::string& env_name, const std::string& abs_name) {
    Loaded out;
    bool builtin_abs = false;
    if (env_name == "corridor") {
        CorridorFixture f = build_corridor_grid();
        out.mdp = std::move(f.mdp);
        out.mapping = std::move(f.mapping);
        out.abstract_model = std::move(f.abstraction);
        builtin_abs = true;
    } else if (env_name == "two-region") {
        TwoRegionFixture f = build_two_region_grid();
        out.mdp = std::move(f.mdp);
        out.mapping = std::move(f.mapping);
    } else if (env_name == "appendixB-chain") {
        ChainFixture f = build_appendixB_chain();
        out.mdp = std::move(f.mdp);
        out.mapping = std::move(f.mapping);
        out.abstract_model = std::move(f.abstraction);
        builtin_abs = true;
    } else if (env_name.rfind("random:", 0) == 0) {
        int S = 6, A = 2, branching = 3;
        uint64_t seed = 0;
        std::sscanf(env_name.c_str() + 7, "%d,%d,%d,%llu", &S, &A, &branching,
                    (unsigned long long*)&seed);
        out.mdp = random_mdp(seed, S, A, branching);
        out.mapping.num_abstract_states = S;
        out.mapping.block_of.resize(S);
        for (int s = 0; s < S; ++s) out.mapping.block_of[s] = s;
    } else {
        std::ifstream in(env_name);
        if (!in) throw std::runtime_error("cannot open environment file " + env_name);
        out.mdp = parse_env(in);
        out.mapping.num_abstract_states = out.mdp.num_states();
        out.mapping.block_of.resize(out.mdp.num_states());
        for (int s = 0; s < out.mdp.num_states(); ++s) out.mapping.block_of[s] = s;
    }

    if (abs_name == "builtin" || (abs_name.empty() && builtin_abs)) {
        if (!builtin_abs)
            throw std::runtime_error("environment '" + env_name + "' has no builtin abstraction");
        out.has_abstract = true;
    } else if (abs_name == "identity") {
        AbstractionPair pair = identity_abstraction(out.mdp);
        out.mapping = std::move(pair.mapping);
        out.abstract_model = std::move(pair.abstract_model);
        out.has_abstract = true;
    } else if (abs_name.rfind("synth:", 0) == 0) {
        const double gb = std::stod(abs_name.substr(6));
        out.abstract_model = synthesize_admissible_abstraction(out.mdp, out.mapping, gb);
        out.has_abstract = true;
    } else if (!abs_name.empty()) {
        std::ifstream in(abs_name);
        if (!in) throw std::runtime_error("cannot open abstraction file " + abs_name);
        auto [abs, mapping] = parse_abstraction(in);
        out.abstract_model = std::move(abs);
        out.mapping = std::move(mapping);
        out.has_abstract = true;
    }
    if (!out.has_abstract)
        throw std::runtime_error("no abstraction given; pass --abs");
    return out;
}

AbstractionPair make_pair(Loaded& loaded) {
    AbstractionPair pair;
    pair.ground = loaded.mdp;
    pair.mapping = loaded.mapping;
    pair.abstract_model = loaded.abstract_model;
    // rebuild the abstract start as the block marginal of the ground start
    std::vector<double> nu0(pair.mapping.num_abstract_states, 0.0);
    for (int s = 0; s < pair.ground.num_states(); ++s)
        nu0[pair.mapping(s)] += pair.ground.start_distribution()[s];
    SecondOrderMdp& m = pair.abstract_model;
    std::vector<double> T(size_t(m.num_states() + 1) * m.num_states() * m.num_actions() *
                          m.num_states());
    std::vector<double> R(size_t(m.num_states() + 1) * m.num_states() * m.num_actions());
    for (int sp = 0; sp <= m.num_states(); ++sp)
        for (int s = 0; s < m.num_states(); ++s)
            for (int a = 0; a < m.num_actions(); ++a) {
                R[(size_t(sp) * m.num_states() + s) * m.num_actions() + a] = m.reward(sp, s, a);
                for (int s2 = 0; s2 < m.num_states(); ++s2)
                    T[((size_t(sp) * m.num_states() + s) * m.num_actions() + a) * m.num_states() +
                      s2] = m.transition(sp, s, a, s2);
            }
    pair.abstract_model = SecondOrderMdp(m.num_states(), m.num_actions(), m.gamma(), std::move(T),
                                         std::move(R), std::move(nu0));
    pair.validate();
    return pair;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

std::string format_option(const FRelativeOption& option) {
    std::ostringstream os;
    os.precision(12);
    os << "option from_block " << option.from_block << " block " << option.block
       << (option.stochastic() ? " stochastic" : " deterministic") << '\n';
    for (size_t k = 0; k < option.states.size(); ++k) {
        os << option.states[k];
        if (option.stochastic()) {
            for (int a = 0; a < option.stoch.num_actions; ++a)
                os << ' ' << option.stoch.at(int(k), a);
        } else {
            os << ' ' << option.det[k];
        }
        os << '\n';
    }
    return os.str();
}

int cmd_verify(Loaded& loaded, const std::string& checks, double eps_r, double eps_t,
               const fs::path& out_dir) {
    AbstractionPair pair = make_pair(loaded);
    fs::create_directories(out_dir);
    bool all_ok = true;

    std::istringstream cs(checks);
    std::string check;
    while (std::getline(cs, check, ',')) {
        if (check == "realizable") {
            RealizabilityReport report = check_realizable_abstraction(pair, eps_r, eps_t);
            std::ostringstream os;
            os.precision(12);
            os << "sp,s,a,vacuous,has_witness,value_gap,occupancy_gap,realizable\n";
            for (const TupleRealizability& t : report.tuples)
                os << t.sp << ',' << t.s << ',' << t.a << ',' << t.vacuous << ','
                   << t.has_witness << ',' << t.worst_value_gap << ',' << t.worst_occupancy_gap
                   << ',' << t.realizable << '\n';
            write_file(out_dir / "realizability.csv", os.str());
            if (!report.all_realizable) all_ok = false;
            std::cout << "realizable: " << (report.all_realizable ? "pass" : "fail") << '\n';
        } else if (check == "admissible") {
            AdmissibilityReport report = check_admissible(pair);
            std::ostringstream os;
            os << "decided,admissible,options_checked,violations\n"
               << report.decided << ',' << report.admissible << ',' << report.options_checked
               << ',' << report.violations.size() << '\n';
            write_file(out_dir / "admissibility.csv", os.str());
            if (!report.admissible) all_ok = false;
            std::cout << "admissible: "
                      << (report.admissible ? "pass"
                                            : (report.decided ? "fail" : "undecided at this scale"))
                      << '\n';
        } else if (check == "homomorphism") {
            // first-order view of the abstract model, taken from the dummy rows
            const SecondOrderMdp& m = pair.abstract_model;
            const int Sb = m.num_states();
            if (m.num_actions() != pair.ground.num_actions())
                throw std::runtime_error("homomorphism check needs matching action spaces");
            std::vector<double> T(size_t(Sb) * m.num_actions() * Sb), R(size_t(Sb) * m.num_actions());
            for (int s = 0; s < Sb; ++s)
                for (int a = 0; a < m.num_actions(); ++a) {
                    R[size_t(s) * m.num_actions() + a] = m.reward(m.dummy_state(), s, a);
                    for (int s2 = 0; s2 < Sb; ++s2)
                        T[(size_t(s) * m.num_actions() + a) * Sb + s2] =
                            m.transition(m.dummy_state(), s, a, s2);
                }
            GroundMdp abs1(Sb, m.num_actions(), m.gamma(), std::move(T), std::move(R),
                           m.start_distribution());
            std::vector<std::vector<int>> gmaps(pair.ground.num_states());
            for (auto& gm : gmaps) {
                gm.resize(pair.ground.num_actions());
                for (int a = 0; a < pair.ground.num_actions(); ++a) gm[a] = a;
            }
            HomomorphismResult result = check_homomorphism(pair.ground, abs1, pair.mapping, gmaps);
            std::ostringstream os;
            os << "ok,detail,conflict_a,conflict_b\n"
               << result.ok << ",\"" << result.detail << "\","
               << (result.conflicting_states ? result.conflicting_states->first : -1) << ','
               << (result.conflicting_states ? result.conflicting_states->second : -1) << '\n';
            write_file(out_dir / "homomorphism.csv", os.str());
            if (!result.ok) all_ok = false;
            std::cout << "homomorphism: " << (result.ok ? "pass" : "fail") << '\n';
        } else if (!check.empty()) {
            throw std::runtime_error("unknown check '" + check + "'");
        }
    }
    return all_ok ? kExitOk : kExitOther;
}

int cmd_realize(Loaded& loaded, const std::string& tuple_str, int from_state, bool online,
                double eps_r, double eps_t, double eta, double lambda, double delta,
                uint64_t seed, long episodes, int n_min, const fs::path& out_dir) {
    AbstractionPair pair = make_pair(loaded);
    int sp = -1, s = -1, a = -1;
    if (std::sscanf(tuple_str.c_str(), "%d,%d,%d", &sp, &s, &a) != 3)
        throw std::runtime_error("bad --tuple, expected sp,s,a");
    fs::create_directories(out_dir);

    EntryExitSets sets = compute_entries_exits(pair.ground, pair.mapping);
    const std::vector<int>& entries = sets.entries_for(sp, s);
    if (entries.empty()) throw std::runtime_error("tuple has no entry states");

    RealizationResult result;
    if (!online) {
        RealizationProblem problem;
        problem.block = build_block_mdp(pair.ground, pair.mapping, s);
        problem.from_block = sp;
        problem.targets = tuple_targets(pair.abstract_model, sp, s, a);
        problem.eps_r = eps_r;
        problem.eps_t = eps_t;
        problem.nu_local.assign(problem.block.num_local(), 0.0);
        if (from_state >= 0) {
            if (problem.block.local_state(from_state) < 0)
                throw std::runtime_error("--from state is not in the block");
            problem.nu_local[problem.block.local_state(from_state)] = 1.0;
        } else {
            for (int e : entries)
                problem.nu_local[problem.block.local_state(e)] = 1.0 / double(entries.size());
        }
        result = realize_exact(problem);
    } else {
        OnlineRealizerConfig rc;
        rc.eps_t = eps_t;
        rc.eta = eta;
        rc.lambda = lambda;
        rc.delta_i = delta;
        rc.n_min_override = n_min;
        OnlineRealizer realizer(pair.mapping, pair.ground.num_actions(), pair.ground.gamma(), sp,
                                s, tuple_targets(pair.abstract_model, sp, s, a), rc);
        Simulator sim(pair.ground, seed);
        Rng rng(seed ^ 0xabcdef12345ULL);
        const int Sb = pair.mapping.num_abstract_states;
        long attempts = 0;
        while (!realizer.enough() && attempts++ < episodes) {
            // wander until the block is entered with the right predecessor
            int cur = sim.reset();
            int prev_block = Sb; // dummy
            long guard = 0;
            while (!(pair.mapping(cur) == s && prev_block == sp) && guard++ < 100000) {
                const int b = pair.mapping(cur);
                cur = sim.step(rng.uniform_int(pair.ground.num_actions())).first;
                if (pair.mapping(cur) != b) prev_block = b;
            }
            if (pair.mapping(cur) != s || prev_block != sp) continue;
            realizer.rollout_control(sim);
        }
        if (!realizer.enough()) {
            std::cerr << "online realizer: rollout budget exhausted\n";
            return kExitCap;
        }
        result = realizer.get();
    }

    std::ostringstream cert;
    cert.precision(12);
    cert << "abstract_state,target,required,achieved_slack\n";
    TupleTargets targets = tuple_targets(pair.abstract_model, sp, s, a);
    for (int b = 0; b < pair.mapping.num_abstract_states; ++b) {
        if (b == s) continue;
        cert << b << ',' << targets.exit_occupancy[b] << ','
             << targets.exit_occupancy[b] - eps_t << ','
             << (result.constraint_slack.empty() ? 0.0 : result.constraint_slack[b]) << '\n';
    }
    write_file(out_dir / "certificate.csv", cert.str());
    if (!result.feasible) {
        std::cout << "infeasible, max gap " << result.max_gap << '\n';
        return kExitInfeasible;
    }
    write_file(out_dir / "option.txt", format_option(result.option));
    std::cout << "feasible, value " << result.value << '\n';
    return kExitOk;
}

void write_run_outputs(const fs::path& dir, const AbstractionPair& pair, const RarlConfig& config,
                       const RarlResult& result) {
    fs::create_directories(dir);
    std::ostringstream os;
    os.precision(12);
    os << "episode,return,escape,known_tuples,updates,abstract_value,seconds\n";
    for (const EpisodeLog& e : result.episodes)
        os << e.episode << ',' << e.discounted_return << ',' << e.escape << ',' << e.known_tuples
           << ',' << e.updates << ',' << e.abstract_value << ',' << e.seconds << '\n';
    write_file(dir / "episodes.csv", os.str());

    std::ostringstream opts;
    for (const auto& [key, option] : result.realized) {
        const auto [sp, s, a] = key;
        opts << "tuple " << sp << ' ' << s << ' ' << a << '\n' << format_option(option);
    }
    write_file(dir / "options.txt", opts.str());
    write_file(dir / "final_model.txt", write_abstraction(result.final_model, pair.mapping));

    std::ostringstream meta;
    meta.precision(12);
    meta << "key,value\n";
    meta << "num_abstract," << pair.mapping.num_abstract_states << '\n';
    meta << "num_abstract_actions," << pair.abstract_model.num_actions() << '\n';
    meta << "eps," << config.eps << '\n';
    meta << "delta," << config.delta << '\n';
    meta << "seed," << config.seed << '\n';
    meta << "updates," << result.updates << '\n';
    meta << "realizer_sample_bound," << result.realizer_sample_bound << '\n';
    meta << "cap_exceeded," << result.cap_exceeded << '\n';
    write_file(dir / "run_meta.csv", meta.str());
    if (!result.notes.empty()) {
        std::ostringstream notes;
        for (const std::string& n : result.notes) notes << n << '\n';
        write_file(dir / "notes.txt", notes.str());
    }
}

int cmd_run(Loaded& loaded, const RarlConfig& base_config, bool inflate_rewards,
            const std::string& seeds_range, const fs::path& out_dir) {
    AbstractionPair pair = make_pair(loaded);
    if (inflate_rewards) {
        SecondOrderMdp& m = pair.abstract_model;
        for (int sp = 0; sp <= m.num_states(); ++sp)
            for (int s = 0; s < m.num_states(); ++s)
                for (int a = 0; a < m.num_actions(); ++a) m.reward_at(sp, s, a) = 1.0;
    }

    std::vector<uint64_t> seeds;
    if (!seeds_range.empty()) {
        unsigned long long lo = 0, hi = 0;
        if (std::sscanf(seeds_range.c_str(), "%llu..%llu", &lo, &hi) != 2 || hi < lo)
            throw std::runtime_error("bad --seeds, expected a..b");
        for (unsigned long long k = lo; k <= hi; ++k) seeds.push_back(k);
    } else {
        seeds.push_back(base_config.seed);
    }

    std::vector<int> codes(seeds.size(), kExitOk);
#pragma omp parallel for schedule(dynamic)
    for (size_t i = 0; i < seeds.size(); ++i) {
        RarlConfig config = base_config;
        config.seed = seeds[i];
        Simulator sim(pair.ground, config.seed);
        RarlResult result = rarl_run(sim, pair, config);
        const fs::path dir =
            seeds.size() == 1 ? out_dir : out_dir / ("seed-" + std::to_string(seeds[i]));
        write_run_outputs(dir, pair, config, result);
        if (result.cap_exceeded) codes[i] = kExitCap;
    }
    for (int c : codes)
        if (c != kExitOk) return c;
    return kExitOk;
}

int cmd_report(const fs::path& run_dir, const fs::path& out_dir) {
    std::ifstream episodes(run_dir / "episodes.csv");
    std::ifstream meta(run_dir / "run_meta.csv");
    if (!episodes || !meta) {
        std::cerr << "report: " << run_dir << " is not a run directory\n";
        return kExitOther;
    }
    fs::create_directories(out_dir);

    std::map<std::string, double> kv;
    std::string line;
    std::getline(meta, line);
    while (std::getline(meta, line)) {
        const auto comma = line.find(',');
        if (comma != std::string::npos)
            kv[line.substr(0, comma)] = std::stod(line.substr(comma + 1));
    }

    long total = 0, escapes = 0;
    double last_return = 0.0;
    std::ostringstream returns;
    returns << "episode,return\n";
    std::getline(episodes, line); // header
    while (std::getline(episodes, line)) {
        std::istringstream ls(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ls, field, ',')) fields.push_back(field);
        if (fields.size() < 7) continue;
        ++total;
        escapes += fields[2] == "1";
        last_return = std::stod(fields[1]);
        returns << fields[0] << ',' << fields[1] << '\n';
    }

    RarlConfig config;
    config.eps = kv.count("eps") ? kv["eps"] : 0.05;
    config.delta = kv.count("delta") ? kv["delta"] : 0.1;
    const double budget =
        sample_complexity_budget(config, int(kv["num_abstract"]), int(kv["num_abstract_actions"]),
                                 kv["realizer_sample_bound"]);

    std::ostringstream os;
    os.precision(12);
    os << "key,value\n";
    os << "episodes," << total << '\n';
    os << "escape_episodes," << escapes << '\n';
    os << "escape_budget," << budget << '\n';
    os << "within_budget," << (double(escapes) <= budget) << '\n';
    os << "updates," << long(kv["updates"]) << '\n';
    os << "final_return," << last_return << '\n';
    write_file(out_dir / "summary.csv", os.str());
    write_file(out_dir / "returns.csv", returns.str());
    std::cout << "episodes " << total << ", escapes " << escapes << ", budget " << budget << '\n';
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Realizable-abstraction toolkit"};
    app.require_subcommand(1);

    std::string env_name, abs_name, checks = "realizable,admissible", tuple_str, seeds_range;
    std::string out_dir = "out", run_dir;
    double eps_r = 0.0, eps_t = 0.0, eta = 0.05, lambda = 0.05, eps = 0.05, delta = 0.1;
    uint64_t seed = 0;
    long episodes = 200000;
    int from_state = -1, n_min = 0;
    bool online = false, inflate = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--env", env_name, "builtin name or environment file");
        cmd->add_option("--abs", abs_name, "builtin|identity|synth:<gamma>|file");
        cmd->add_option("--eps-r", eps_r);
        cmd->add_option("--eps-t", eps_t);
        cmd->add_option("--eta", eta);
        cmd->add_option("--lambda", lambda);
        cmd->add_option("--eps", eps);
        cmd->add_option("--delta", delta);
        cmd->add_option("--seed", seed);
        cmd->add_option("--episodes", episodes);
        cmd->add_option("--n-min", n_min, "per-state-action visit requirement override");
        cmd->add_option("--out", out_dir);
    };

    CLI::App* verify = app.add_subcommand("verify", "check realizability/admissibility");
    add_common(verify);
    verify->add_option("--checks", checks, "comma list: realizable,admissible,homomorphism");

    CLI::App* realize = app.add_subcommand("realize", "synthesize one option");
    add_common(realize);
    realize->add_option("--tuple", tuple_str, "sp,s,a")->required();
    realize->add_option("--from", from_state, "ground entry state (point-mass distribution)");
    realize->add_flag("--online", online, "use the online model-based realizer");

    CLI::App* run = app.add_subcommand("run", "run the learning loop");
    add_common(run);
    run->add_flag("--inflate-rewards", inflate, "set every abstract reward to 1");
    run->add_option("--seeds", seeds_range, "a..b: fan out one run per seed");

    CLI::App* report = app.add_subcommand("report", "summarize a run directory");
    report->add_option("--run", run_dir, "run directory")->required();
    report->add_option("--out", out_dir);

    CLI11_PARSE(app, argc, argv);

#ifdef _OPENMP
    if (const char* cap = std::getenv("RARL_KIT_THREADS"))
        omp_set_num_threads(std::max(1, atoi(cap)));
#endif

    try {
        if (report->parsed()) return cmd_report(run_dir, out_dir);
        Loaded loaded = load_env_and_abs(env_name, abs_name);
        if (verify->parsed()) return cmd_verify(loaded, checks, eps_r, eps_t, out_dir);
        if (realize->parsed())
            return cmd_realize(loaded, tuple_str, from_state, online, eps_r, eps_t, eta, lambda,
                               delta, seed, episodes, n_min, out_dir);
        if (run->parsed()) {
            RarlConfig config;
            config.eps_r = eps_r;
            config.eps_t = eps_t;
            config.eta = eta;
            config.lambda = lambda;
            config.eps = eps;
            config.delta = delta;
            config.seed = seed;
            config.episode_cap = episodes;
            config.n_min_override = n_min;
            return cmd_run(loaded, config, inflate, seeds_range, out_dir);
        }
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return kExitParse;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitOther;
    }
    return kExitOther;
}
