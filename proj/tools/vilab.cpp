// vilab — generate, solve, and verify the three-state adversarial family on
// which value iteration needs exponentially many iterations while policy
// iteration finishes in two, plus general MDP solving over exact backends.

#include "vilab/family.hpp"
#include "vilab/mdp_json.hpp"
#include "vilab/solvers.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

using namespace vilab;

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

std::optional<mpfr_prec_t> precision_override() {
    const char* raw = std::getenv("VILAB_PRECISION_OVERRIDE");
    if (raw == nullptr || *raw == '\0') {
        return std::nullopt;
    }
    char* end = nullptr;
    long value = std::strtol(raw, &end, 10);
    if (*end != '\0' || value < MPFR_PREC_MIN || value > (1L << 24)) {
        throw std::runtime_error("VILAB_PRECISION_OVERRIDE must be an integer in [" +
                                 std::to_string(MPFR_PREC_MIN) + ", 2^24], got '" +
                                 std::string(raw) + "'");
    }
    return static_cast<mpfr_prec_t>(value);
}

// Applies the environment override wherever required_precision_bits would
// otherwise size an exp/bigfloat run.
void apply_precision_override(FamilyParams& params) {
    if (params.variant == RewardVariant::Exp && params.backend.kind == BackendKind::BigFloat) {
        if (auto p = precision_override()) {
            params.backend = Backend::bigfloat(*p);
        }
    }
}

struct GenerateArgs {
    std::string params_file;
    std::string mdp_file;
    bool family_exp = false;
    int kmax = 0;
    std::string out_dir = ".";
    int k = 0;
    std::vector<long> m_values;
    std::string beta;
    std::string variant = "dyadic";
    std::string backend = "";
    long precision = 0;
    std::string out;
};

struct SolveArgs {
    std::string instance;
    std::string method;
    std::string target_policy;
    long patience = 1;
    std::string span_eps;
    long max_iter = 0;
    std::string trace_path;
    bool trace_values = false;
    std::string init = "first";
};

struct ExperimentArgs {
    int kmax = 0;
    std::string beta = "9/10";
    std::vector<std::string> backends{"bigfloat"};
    std::string out = "experiment.csv";
    long max_iter = 0; // 0: default per-row bound max(100000, 2*predicted)
};

struct VerifyArgs {
    std::string instance;
    std::string params_file;
    int k = 0;
    std::vector<long> m_values;
    std::string beta;
    std::string variant = "dyadic";
    std::string backend = "";
    long precision = 0;
    long jmax = -1; // -1: default 2*predicted
};

// Builds FamilyParams from --k/--M/--beta/--variant/--backend/--precision.
FamilyParams params_from_flags(int k, const std::vector<long>& m_values, const std::string& beta,
                               const std::string& variant, const std::string& backend,
                               long precision) {
    FamilyParams params;
    params.k = k;
    params.M = m_values;
    params.beta = parse_scalar(beta, Backend::rational());
    if (variant == "exp") {
        params.variant = RewardVariant::Exp;
    } else if (variant == "dyadic") {
        params.variant = RewardVariant::Dyadic;
    } else {
        throw std::runtime_error("unknown variant '" + variant + "' (expected exp or dyadic)");
    }

    std::string backend_name = backend;
    if (backend_name.empty()) {
        backend_name = params.variant == RewardVariant::Exp ? "bigfloat" : "rational";
    }
    if (backend_name == "rational") {
        params.backend = Backend::rational();
    } else if (backend_name == "double") {
        params.backend = Backend::hardware_double();
    } else if (backend_name == "bigfloat") {
        if (precision > 0) {
            params.backend = Backend::bigfloat(static_cast<mpfr_prec_t>(precision));
        } else {
            params.backend = Backend::bigfloat(64); // placeholder for sizing
            check_params(params);
            params.backend = Backend::bigfloat(required_precision_bits(params));
            apply_precision_override(params);
        }
    } else {
        throw std::runtime_error("unknown backend '" + backend_name +
                                 "' (expected rational, bigfloat, or double)");
    }
    if (precision > 0 && params.backend.kind != BackendKind::BigFloat) {
        throw std::runtime_error("--precision applies to the bigfloat backend only");
    }
    check_params(params);
    return params;
}

FamilyParams load_params_file(const std::string& path) {
    ordered_json j = read_json_file(path);
    FamilyParams params = family_params_from_json(j);
    // The override replaces required_precision_bits sizing, which from_json
    // applies exactly when the file omits precision_bits.
    if (!j.contains("precision_bits")) {
        apply_precision_override(params);
    }
    return params;
}

void emit_json(const ordered_json& j, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << j.dump(2) << "\n";
    } else {
        write_json_file(out_path, j);
    }
}

int print_violations(const std::vector<Violation>& violations) {
    for (const auto& v : violations) {
        std::cerr << "violation [" << violation_kind_name(v.kind) << "] " << v.location << ": "
                  << v.message << "\n";
    }
    return kExitFail;
}

int cmd_generate(const GenerateArgs& args) {
    int modes = (!args.params_file.empty() ? 1 : 0) + (!args.mdp_file.empty() ? 1 : 0) +
                (args.family_exp ? 1 : 0) + (args.k != 0 ? 1 : 0);
    if (modes != 1) {
        std::cerr << "generate: choose exactly one of --k/--M flags, --params, --mdp, or "
                     "--family-exp\n";
        return kExitUsage;
    }

    if (!args.mdp_file.empty()) {
        Mdp mdp = read_mdp_file(args.mdp_file);
        std::vector<Violation> violations = validate(mdp);
        if (!violations.empty()) {
            return print_violations(violations);
        }
        emit_json(mdp_to_json(mdp), args.out);
        return kExitPass;
    }

    if (args.family_exp) {
        if (args.kmax < 1) {
            std::cerr << "generate: --family-exp requires --kmax >= 1\n";
            return kExitUsage;
        }
        if (args.beta.empty()) {
            std::cerr << "generate: --family-exp requires --beta\n";
            return kExitUsage;
        }
        Scalar beta = parse_scalar(args.beta, Backend::rational());
        std::vector<FamilyParams> family = exponential_family(args.kmax, beta);
        for (FamilyParams& params : family) {
            apply_precision_override(params);
            Mdp mdp = build_family(params);
            std::vector<Violation> violations = validate(mdp);
            if (!violations.empty()) {
                return print_violations(violations);
            }
            std::string base = args.out_dir + "/family_exp_k" + std::to_string(params.k);
            write_mdp_file(base + ".json", mdp);
            write_json_file(base + ".params.json", family_params_to_json(params));
            std::cout << base << ".json\n" << base << ".params.json\n";
        }
        return kExitPass;
    }

    FamilyParams params;
    if (!args.params_file.empty()) {
        params = load_params_file(args.params_file);
    } else {
        if (args.beta.empty()) {
            std::cerr << "generate: --beta is required with --k/--M\n";
            return kExitUsage;
        }
        params = params_from_flags(args.k, args.m_values, args.beta, args.variant, args.backend,
                                   args.precision);
    }
    Mdp mdp = build_family(params);
    std::vector<Violation> violations = validate(mdp);
    if (!violations.empty()) {
        return print_violations(violations);
    }
    emit_json(mdp_to_json(mdp), args.out);
    return kExitPass;
}

Policy initial_policy(const Mdp& mdp, const std::string& init) {
    Policy policy;
    if (init == "first" || init == "worst") {
        for (StateId x = 1; x <= mdp.n; ++x) {
            const auto& as = mdp.actions(x);
            policy.choice.push_back(init == "first" ? as.front() : as.back());
        }
        return policy;
    }
    policy = policy_from_json(read_json_file(init), mdp.n);
    require_valid_policy(mdp, policy);
    return policy;
}

int cmd_solve(const SolveArgs& args) {
    Mdp mdp = read_mdp_file(args.instance);
    std::vector<Violation> violations = validate(mdp);
    if (!violations.empty()) {
        print_violations(violations);
        std::cerr << "solve: instance failed validation\n";
        return kExitUsage;
    }

    ordered_json summary;
    std::optional<VITrace> trace;

    if (args.method == "vi") {
        StopRules rules;
        if (!args.target_policy.empty()) {
            Policy target;
            if (args.target_policy == "optimal") {
                target = policy_iteration(mdp, initial_policy(mdp, "first")).policy;
            } else {
                target = policy_from_json(read_json_file(args.target_policy), mdp.n);
                require_valid_policy(mdp, target);
            }
            rules.target = StopRules::TargetPolicy{std::move(target), args.patience};
        }
        if (!args.span_eps.empty()) {
            rules.span_epsilon = parse_scalar(args.span_eps, mdp.backend);
        }
        if (args.max_iter > 0) {
            rules.max_iterations = args.max_iter;
        }
        if (!rules.any()) {
            std::cerr << "solve: supply at least one stop rule "
                         "(--target-policy, --span-eps, --max-iter)\n";
            return kExitUsage;
        }
        trace = value_iteration(mdp, ValueFunction::zeros(mdp.n, mdp.backend), rules,
                                args.trace_values);
        summary["method"] = "vi";
        summary["iterations"] = trace->total_iterations();
        if (trace->switch_iteration) {
            summary["switch_iteration"] = *trace->switch_iteration;
        }
        summary["final_policy"] = policy_to_json(*trace->last().greedy);
        summary["stop_reason"] = stop_reason_name(trace->stop_reason);
    } else { // "pi" (membership enforced by the parser)
        if (!args.trace_path.empty()) {
            std::cerr << "solve: --trace applies to --method vi only\n";
            return kExitUsage;
        }
        PIResult result = policy_iteration(mdp, initial_policy(mdp, args.init));
        summary["method"] = "pi";
        summary["iterations"] = result.iterations;
        summary["final_policy"] = policy_to_json(result.policy);
        summary["stop_reason"] = "PolicyStable";
    }

    if (trace && !args.trace_path.empty()) {
        std::ofstream out(args.trace_path);
        if (!out) {
            std::cerr << "solve: cannot open '" << args.trace_path << "' for writing\n";
            return kExitUsage;
        }
        write_trace_jsonl(out, *trace);
    }
    std::cout << summary.dump(2) << "\n";
    return kExitPass;
}

int cmd_experiment(const ExperimentArgs& args) {
    if (args.kmax < 1) {
        std::cerr << "experiment: --kmax must be >= 1\n";
        return kExitUsage;
    }
    for (const std::string& b : args.backends) {
        if (b != "bigfloat" && b != "double") {
            std::cerr << "experiment: unknown backend '" << b
                      << "' (expected bigfloat or double)\n";
            return kExitUsage;
        }
    }
    Scalar beta = parse_scalar(args.beta, Backend::rational());
    std::vector<FamilyParams> family = exponential_family(args.kmax, beta);

    std::ofstream csv(args.out);
    if (!csv) {
        std::cerr << "experiment: cannot open '" << args.out << "' for writing\n";
        return kExitUsage;
    }
    csv << "k,m,M_k,beta,backend,predicted_switch,measured_switch,pi_iterations,verdict,"
           "wall_seconds\n";

    bool all_pass = true;
    for (const FamilyParams& base_params : family) {
        for (const std::string& backend_name : args.backends) {
            FamilyParams params = base_params;
            if (backend_name == "double") {
                params.backend = Backend::hardware_double();
            } else {
                apply_precision_override(params);
            }

            auto t0 = std::chrono::steady_clock::now();
            Mdp mdp = build_family(params);
            long predicted = predicted_switch_iteration(params);
            long bound = args.max_iter > 0 ? args.max_iter
                                           : std::max<long>(100000, 2 * predicted);
            std::optional<long> measured = measure_switch_iteration(mdp, 1, 0, bound);
            PIResult pi = policy_iteration(mdp, family_policy_choosing(params.k));
            double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                              .count();

            bool pass = measured.has_value() && *measured == predicted &&
                        exceeds_switch_lower_bound(params, *measured);
            all_pass = all_pass && pass;

            std::string measured_text =
                measured ? std::to_string(*measured) : std::string("not_reached");
            std::string verdict = pass ? "PASS" : "FAIL";
            csv << params.k << ',' << (params.k + 3) << ',' << params.M.back() << ','
                << params.beta.str() << ',' << backend_name << ',' << predicted << ','
                << measured_text << ',' << pi.iterations << ',' << verdict << ','
                << std::fixed << std::setprecision(6) << wall << "\n";
            std::cout << "k=" << params.k << " backend=" << backend_name
                      << " predicted=" << predicted << " measured=" << measured_text
                      << " pi=" << pi.iterations << " verdict=" << verdict << "\n";
        }
    }
    if (!csv) {
        std::cerr << "experiment: failed writing '" << args.out << "'\n";
        return kExitUsage;
    }
    return all_pass ? kExitPass : kExitFail;
}

int cmd_verify(const VerifyArgs& args) {
    FamilyParams params;
    if (!args.params_file.empty()) {
        params = load_params_file(args.params_file);
    } else if (args.k != 0) {
        if (args.beta.empty()) {
            std::cerr << "verify: --beta is required with --k/--M\n";
            return kExitUsage;
        }
        params = params_from_flags(args.k, args.m_values, args.beta, args.variant, args.backend,
                                   args.precision);
    } else {
        std::cerr << "verify: supply --params or the --k/--M/--beta flags\n";
        return kExitUsage;
    }

    Mdp mdp = build_family(params);
    if (!args.instance.empty()) {
        Mdp loaded = read_mdp_file(args.instance);
        if (mdp_to_json(loaded) != mdp_to_json(mdp)) {
            std::cerr << "verify: '" << args.instance
                      << "' is not the adversarial-family instance for the given parameters; "
                         "the closed-form oracle is undefined for it\n";
            return kExitUsage;
        }
    }

    long predicted = predicted_switch_iteration(params);
    long jmax = args.jmax >= 0 ? args.jmax : 2 * predicted;

    // Relative discrepancy of each VI iterate against the closed form
    // (absolute where the closed form is zero).
    Scalar max_disc = Scalar::zero(mdp.backend);
    ValueFunction v = ValueFunction::zeros(mdp.n, mdp.backend);
    for (long j = 0; j <= jmax; ++j) {
        if (j > 0) {
            v = bellman_backup(mdp, v);
        }
        ValueFunction oracle = closed_form_values(params, j);
        for (int i = 0; i < mdp.n; ++i) {
            Scalar diff = abs(v.values[static_cast<std::size_t>(i)] -
                              oracle.values[static_cast<std::size_t>(i)]);
            const Scalar& ref = oracle.values[static_cast<std::size_t>(i)];
            Scalar disc = ref.is_zero() ? diff : diff / abs(ref);
            if (disc > max_disc) {
                max_disc = std::move(disc);
            }
        }
    }

    Scalar bound = Scalar::zero(mdp.backend);
    if (params.variant == RewardVariant::Exp) {
        long p = mdp.backend.kind == BackendKind::BigFloat ? mdp.backend.precision_bits : 53;
        bound = pow(Scalar::rational(1, 2).converted_to(mdp.backend),
                    static_cast<unsigned long>(p - 4));
    }
    bool disc_pass = max_disc <= bound;

    bool switch_checked = jmax >= predicted;
    std::optional<long> measured;
    bool switch_pass = true;
    if (switch_checked) {
        measured = measure_switch_iteration(mdp, 1, 0, jmax);
        switch_pass = measured.has_value() && *measured == predicted;
    }

    bool pass = disc_pass && switch_pass;
    ordered_json report;
    report["k"] = params.k;
    report["variant"] = reward_variant_name(params.variant);
    report["backend"] = mdp.backend.describe();
    report["jmax"] = jmax;
    report["predicted_switch"] = predicted;
    if (!switch_checked) {
        report["measured_switch"] = "skipped";
        report["switch_pass"] = "skipped";
    } else {
        if (measured) {
            report["measured_switch"] = *measured;
        } else {
            report["measured_switch"] = "not_reached";
        }
        report["switch_pass"] = switch_pass;
    }
    report["max_discrepancy"] = max_disc.str();
    report["discrepancy_bound"] = bound.str();
    report["discrepancy_pass"] = disc_pass;
    report["verdict"] = pass ? "PASS" : "FAIL";
    std::cout << report.dump(2) << "\n";
    return pass ? kExitPass : kExitFail;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exact-arithmetic MDP solvers and the adversarial family on which value "
                 "iteration is exponentially slow"};
    app.require_subcommand(1);

    GenerateArgs gen;
    CLI::App* generate = app.add_subcommand(
        "generate", "Build an instance (family flags, params file, or MDP pass-through)");
    generate->add_option("--params", gen.params_file, "Family parameters JSON file");
    generate->add_option("--mdp", gen.mdp_file, "Validate and re-emit a generic MDP JSON file");
    generate->add_flag("--family-exp", gen.family_exp,
                       "Emit the exp-reward instances for k = 1..kmax");
    generate->add_option("--kmax", gen.kmax, "Largest k for --family-exp");
    generate->add_option("--out-dir", gen.out_dir, "Directory for --family-exp files")
        ->capture_default_str();
    generate->add_option("--k", gen.k, "Number of non-zero actions at state 1");
    generate->add_option("--M", gen.m_values, "Comma-separated M_1,...,M_k")->delimiter(',');
    generate->add_option("--beta", gen.beta, "Discount factor (rational p/q)");
    generate->add_option("--variant", gen.variant, "Reward variant: exp or dyadic")
        ->capture_default_str();
    generate->add_option("--backend", gen.backend,
                         "Arithmetic backend: rational, bigfloat, or double");
    generate->add_option("--precision", gen.precision, "BigFloat precision in bits");
    generate->add_option("--out", gen.out, "Output file (default: standard output)");

    SolveArgs solve;
    CLI::App* solve_cmd = app.add_subcommand("solve", "Run value or policy iteration");
    solve_cmd->add_option("instance", solve.instance, "Instance JSON file")->required();
    solve_cmd->add_option("--method", solve.method, "vi or pi")
        ->required()
        ->check(CLI::IsMember({"vi", "pi"}));
    solve_cmd->add_option("--target-policy", solve.target_policy,
                          "'optimal' or a policy JSON file (vi stop rule)");
    solve_cmd->add_option("--patience", solve.patience,
                          "Consecutive greedy hits required by --target-policy")
        ->capture_default_str();
    solve_cmd->add_option("--span-eps", solve.span_eps, "Span tolerance (vi stop rule)");
    solve_cmd->add_option("--max-iter", solve.max_iter, "Iteration cap (vi stop rule)");
    solve_cmd->add_option("--trace", solve.trace_path, "Write a JSON-lines trace (vi only)");
    solve_cmd->add_flag("--trace-values", solve.trace_values,
                        "Include value vectors in the trace");
    solve_cmd->add_option("--init", solve.init,
                          "pi initial policy: first, worst, or a policy JSON file")
        ->capture_default_str();

    ExperimentArgs exp;
    CLI::App* experiment = app.add_subcommand(
        "experiment", "Switch-iteration scaling experiment over the exp-reward family");
    experiment->add_option("--kmax", exp.kmax, "Run k = 1..kmax")->required();
    experiment->add_option("--beta", exp.beta, "Discount factor (rational p/q)")
        ->capture_default_str();
    experiment->add_option("--backends", exp.backends,
                           "Comma-separated backends: bigfloat,double")
        ->delimiter(',')
        ->capture_default_str();
    experiment->add_option("--out", exp.out, "CSV output path")->capture_default_str();
    experiment->add_option("--max-iter", exp.max_iter,
                           "Per-row iteration cap (default max(100000, 2*predicted))");

    VerifyArgs ver;
    CLI::App* verify = app.add_subcommand(
        "verify", "Check VI iterates against the closed-form oracle");
    verify->add_option("instance", ver.instance, "Instance JSON file to cross-check");
    verify->add_option("--params", ver.params_file, "Family parameters JSON file");
    verify->add_option("--k", ver.k, "Number of non-zero actions at state 1");
    verify->add_option("--M", ver.m_values, "Comma-separated M_1,...,M_k")->delimiter(',');
    verify->add_option("--beta", ver.beta, "Discount factor (rational p/q)");
    verify->add_option("--variant", ver.variant, "Reward variant: exp or dyadic")
        ->capture_default_str();
    verify->add_option("--backend", ver.backend,
                       "Arithmetic backend: rational, bigfloat, or double");
    verify->add_option("--precision", ver.precision, "BigFloat precision in bits");
    verify->add_option("--jmax", ver.jmax, "Compare iterates 0..jmax (default 2*predicted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitPass : kExitUsage;
    }

    try {
        if (generate->parsed()) {
            return cmd_generate(gen);
        }
        if (solve_cmd->parsed()) {
            return cmd_solve(solve);
        }
        if (experiment->parsed()) {
            return cmd_experiment(exp);
        }
        return cmd_verify(ver);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}
