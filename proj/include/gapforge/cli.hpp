#ifndef GAPFORGE_CLI_HPP
#define GAPFORGE_CLI_HPP

// Command-line front end: verify-gaps, certify, mertens, report, plan.
// Exit status: 0 success, 1 verification or certification failed, 2 usage.

#include "arith.hpp"
#include "interval_engine.hpp"
#include "sieve_functions.hpp"
#include "store.hpp"
#include "theorem.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace gapforge {

inline constexpr int exit_ok = 0;
inline constexpr int exit_failed = 1;
inline constexpr int exit_usage = 2;

struct usage_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace cli_detail {

// Decimal or scientific notation, e.g. "100000" or "1e5".
inline Natural parse_count(const std::string& flag, const std::string& text)
{
    try {
        return parse_decimal_integer(text);
    } catch (const domain_error&) {
        throw usage_error(flag + ": expected an integer, got '" + text + "'");
    }
}

inline std::uint64_t parse_u64(const std::string& flag, const std::string& text)
{
    const Natural v = parse_count(flag, text);
    if (!fits_u64(v))
        throw usage_error(flag + ": out of range");
    return to_u64(v);
}

inline unsigned thread_count(const std::string& flag_value)
{
    std::string text = flag_value;
    if (text.empty()) {
        const char* env = std::getenv("GAPFORGE_THREADS");
        text = env && *env ? env : "1";
    }
    const std::uint64_t t = parse_u64("--threads", text);
    if (t < 1 || t > 1024)
        throw usage_error("--threads: need 1 <= threads <= 1024");
    return static_cast<unsigned>(t);
}

inline void write_json(const nlohmann::json& j, const std::string& path, std::ostream& out)
{
    if (path.empty()) {
        out << j.dump(2) << "\n";
        return;
    }
    std::ofstream f(path);
    if (!f)
        throw resource_error("cannot write " + path);
    f << j.dump(2) << "\n";
}

inline void ensure_writable(const std::string& path)
{
    if (path.empty())
        return;
    std::ofstream f(path, std::ios::app);
    if (!f)
        throw usage_error("path not writable: " + path);
}

} // namespace cli_detail

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    CLI::App app{"certified prime gap and almost-prime bound toolkit", "gapforge"};
    app.require_subcommand(1);

    std::string threads_s;

    // verify-gaps
    auto* vg = app.add_subcommand("verify-gaps", "certify a prime in (n^a, (n+1)^a) for every n in [from, to)");
    std::string vg_from, vg_to, vg_alpha = "3", vg_t = "0", vg_j = "10", vg_b = "10000", vg_ckpt, vg_report;
    vg->add_option("--from", vg_from, "first n")->required();
    vg->add_option("--to", vg_to, "end of range (exclusive)")->required();
    vg->add_option("--alpha", vg_alpha, "integer exponent >= 2");
    vg->add_option("--t", vg_t, "intervals per batch (0 = automatic)");
    vg->add_option("--j", vg_j, "small primes in the wheel modulus");
    vg->add_option("--sieve-bound", vg_b, "sieving bound B");
    vg->add_option("--threads", threads_s, "worker threads (default GAPFORGE_THREADS or 1)");
    vg->add_option("--checkpoint", vg_ckpt, "JSON-lines checkpoint to resume and append");
    vg->add_option("--report", vg_report, "write the range report here instead of stdout");

    // certify
    auto* ce = app.add_subcommand("certify", "outward-rounded almost-prime lower bound chain");
    std::string ce_config = "defaults", ce_nmin, ce_report, ce_grid = "1001";
    ce->add_option("--config", ce_config, "key = value parameter file, or 'defaults'");
    ce->add_option("--n-min", ce_nmin, "override n_min");
    ce->add_option("--s-grid", ce_grid, "grid points for s in [2, 3]");
    ce->add_option("--report", ce_report, "write the certificate here instead of stdout");

    // mertens
    auto* me = app.add_subcommand("mertens", "verify a Mertens-product epsilon window");
    std::string me_lo, me_hi, me_umin = "3", me_eps, me_excl = "2";
    me->add_option("--z-lo", me_lo, "window start")->required();
    me->add_option("--z-hi", me_hi, "window end")->required();
    me->add_option("--u-min", me_umin, "smallest u");
    me->add_option("--eps", me_eps, "epsilon (decimal)")->required();
    me->add_option("--exclude", me_excl, "primes dividing this are left out of the product");
    me->add_option("--threads", threads_s, "worker threads");

    // report
    auto* re = app.add_subcommand("report", "audit a checkpoint and summarise a range");
    std::string re_ckpt, re_alpha = "3", re_from, re_to;
    re->add_option("--checkpoint", re_ckpt, "checkpoint file")->required();
    re->add_option("--alpha", re_alpha, "exponent the checkpoint was built with");
    re->add_option("--from", re_from, "range start (default: smallest n)");
    re->add_option("--to", re_to, "range end, exclusive (default: largest n + 1)");

    // plan
    auto* pl = app.add_subcommand("plan", "show the batch plan for n");
    std::string pl_n, pl_t = "0", pl_alpha = "3", pl_j = "10", pl_b = "10000";
    pl->add_option("--n", pl_n, "batch start")->required();
    pl->add_option("--t", pl_t, "intervals per batch (0 = automatic)");
    pl->add_option("--alpha", pl_alpha, "integer exponent >= 2");
    pl->add_option("--j", pl_j, "small primes in the wheel modulus");
    pl->add_option("--sieve-bound", pl_b, "sieving bound B");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        return exit_usage;
    }

    using namespace cli_detail;
    auto logger = [&err](const std::string& msg) { err << msg << "\n"; };

    try {
        if (*vg) {
            const Natural from = parse_count("--from", vg_from);
            const Natural to = parse_count("--to", vg_to);
            if (from < 1)
                throw usage_error("--from must be >= 1");
            if (to <= from)
                throw usage_error("empty or inverted range: --to must exceed --from");
            RangeOptions opt;
            opt.engine.alpha = static_cast<unsigned>(parse_u64("--alpha", vg_alpha));
            if (opt.engine.alpha < 2 || opt.engine.alpha > 64)
                throw usage_error("--alpha must be an integer in [2, 64]");
            opt.engine.t = parse_u64("--t", vg_t);
            opt.engine.prime_count_hint = static_cast<unsigned>(parse_u64("--j", vg_j));
            if (opt.engine.prime_count_hint > 64)
                throw usage_error("--j must be <= 64");
            opt.engine.sieve_bound = parse_u64("--sieve-bound", vg_b);
            if (opt.engine.sieve_bound < 2 || opt.engine.sieve_bound > prime_table_cap)
                throw usage_error("--sieve-bound must lie in [2, 4e9]");
            opt.threads = thread_count(threads_s);
            if (!vg_ckpt.empty()) {
                ensure_writable(vg_ckpt);
                opt.checkpoint = vg_ckpt;
            }
            ensure_writable(vg_report);
            opt.log = logger;
            const RangeReport rep = verify_range(from, to, opt);
            write_json(to_json(rep), vg_report, out);
            if (!rep.failed.empty()) {
                err << "FAILED: " << rep.failed.size() << " interval(s) without a certified prime\n";
                return exit_failed;
            }
            return exit_ok;
        }

        if (*ce) {
            SieveParams p = ce_config == "defaults" ? default_params() : parse_params_file(ce_config);
            if (!ce_nmin.empty())
                p.n_min = parse_count("--n-min", ce_nmin);
            const std::uint64_t grid = parse_u64("--s-grid", ce_grid);
            if (grid < 2 || grid > 1'000'000)
                throw usage_error("--s-grid must lie in [2, 1e6]");
            ensure_writable(ce_report);
            const TheoremCertificate c = certify_theorem(p, static_cast<int>(grid));
            write_json(to_json(c), ce_report, out);
            if (!c.certified) {
                err << "FAILED: " << c.failed_term << "\n";
                return exit_failed;
            }
            return exit_ok;
        }

        if (*me) {
            EpsWindow w;
            w.z_lo = parse_u64("--z-lo", me_lo);
            w.z_hi = parse_u64("--z-hi", me_hi);
            w.u_min = parse_u64("--u-min", me_umin);
            w.q_excluded = parse_u64("--exclude", me_excl);
            try {
                (void)parse_decimal_rational(me_eps);
            } catch (const domain_error&) {
                throw usage_error("--eps: expected a decimal, got '" + me_eps + "'");
            }
            w.epsilon = me_eps;
            if (w.u_min < 3 || w.z_lo < w.u_min || w.z_hi < w.z_lo)
                throw usage_error("need z_hi >= z_lo >= u_min >= 3");
            const unsigned threads = thread_count(threads_s);
            const PrimeTable table = primes_up_to(std::max<std::uint64_t>(w.z_hi + 1, 2));
            const EpsWindow res = verify_eps_window(w, table, threads);
            write_json(to_json(res), "", out);
            return res.status == EpsStatus::verified ? exit_ok : exit_failed;
        }

        if (*re) {
            const unsigned alpha = static_cast<unsigned>(parse_u64("--alpha", re_alpha));
            const AuditReport audit = audit_checkpoint(re_ckpt, alpha);
            const auto scan = read_checkpoint(re_ckpt);
            Natural from = 1, to = 1;
            if (!scan.records.empty()) {
                from = scan.records.front().n;
                to = scan.records.front().n;
                for (const auto& r : scan.records) {
                    from = std::min(from, r.n);
                    to = std::max(to, r.n);
                }
                to += 1;
            }
            if (!re_from.empty())
                from = parse_count("--from", re_from);
            if (!re_to.empty())
                to = parse_count("--to", re_to);
            if (to < from)
                throw usage_error("inverted range");
            const RangeReport rep = summarize(scan.records, from, to);
            nlohmann::json j = {{"audit", to_json(audit)}, {"range", to_json(rep, false)}};
            write_json(j, "", out);
            return audit.ok() && rep.failed.empty() ? exit_ok : exit_failed;
        }

        if (*pl) {
            const Natural n = parse_count("--n", pl_n);
            EngineConfig cfg;
            cfg.alpha = static_cast<unsigned>(parse_u64("--alpha", pl_alpha));
            cfg.t = parse_u64("--t", pl_t);
            cfg.prime_count_hint = static_cast<unsigned>(parse_u64("--j", pl_j));
            cfg.sieve_bound = parse_u64("--sieve-bound", pl_b);
            const BatchPlan p = plan_batch(n, batch_length(n, cfg), cfg.alpha, cfg.prime_count_hint, cfg.sieve_bound);
            nlohmann::json mp = nlohmann::json::array();
            for (auto q : p.m_primes)
                mp.push_back(q);
            write_json({{"n_start", to_decimal(p.n_start)},
                        {"t", p.t},
                        {"alpha", p.alpha},
                        {"r", to_decimal(p.r)},
                        {"m", to_decimal(p.m)},
                        {"m_primes", mp},
                        {"sieve_bound", p.sieve_bound},
                        {"candidate_budget", p.candidate_budget}},
                       "", out);
            return exit_ok;
        }
    } catch (const usage_error& e) {
        err << "usage error: " << e.what() << "\n";
        return exit_usage;
    } catch (const planning_error& e) {
        err << "planning error: " << e.what() << "\n";
        return exit_failed;
    } catch (const integrity_error& e) {
        err << "integrity error: " << e.what() << "\n";
        return exit_failed;
    } catch (const domain_error& e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_failed;
    }
    return exit_usage;
}

} // namespace gapforge

#endif
