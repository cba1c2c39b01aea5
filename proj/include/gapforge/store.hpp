#ifndef GAPFORGE_STORE_HPP
#define GAPFORGE_STORE_HPP

// JSON-lines checkpoint of verified intervals and the range orchestrator.
//
// One line per interval: {"n", "prime", "stage", "tests", "cert"}. Lines are
// appended in increasing n and flushed to disk at batch boundaries. A crash
// can only leave a torn final line, which is dropped on reopen; a damaged
// line anywhere else is an integrity failure.

#include "arith.hpp"
#include "bls.hpp"
#include "interval_engine.hpp"

#include <json.hpp>

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <system_error>
#include <thread>
#include <vector>

namespace gapforge {

struct integrity_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline nlohmann::json to_json(const VerifiedInterval& v)
{
    return {{"n", to_decimal(v.n)},
            {"prime", to_decimal(v.prime)},
            {"stage", stage_name(v.stage)},
            {"tests", v.tests_used},
            {"cert", v.certificate ? to_json(*v.certificate) : nlohmann::json(nullptr)}};
}

inline VerifiedInterval interval_from_json(const nlohmann::json& j)
{
    try {
        VerifiedInterval v;
        v.n = from_decimal(j.at("n").get<std::string>());
        v.prime = from_decimal(j.at("prime").get<std::string>());
        v.stage = stage_from_name(j.at("stage").get<std::string>());
        v.tests_used = j.at("tests").get<std::uint64_t>();
        const auto& c = j.at("cert");
        if (!c.is_null())
            v.certificate = certificate_from_json(c);
        return v;
    } catch (const nlohmann::json::exception& e) {
        throw domain_error(std::string("malformed interval record: ") + e.what());
    }
}

inline std::string checkpoint_line(const VerifiedInterval& v) { return to_json(v).dump() + "\n"; }

struct CheckpointScan {
    std::vector<VerifiedInterval> records;
    std::vector<std::string> lines; // raw text of each complete record
    std::uint64_t valid_bytes = 0;  // length of the intact prefix
    bool torn_tail = false;
};

/// Reads a checkpoint. Absent file reads as empty.
inline CheckpointScan read_checkpoint(const std::string& path)
{
    CheckpointScan scan;
    std::ifstream in(path, std::ios::binary);
    if (!in)
        return scan;
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string data = buf.str();

    std::size_t pos = 0;
    std::size_t lineno = 0;
    while (pos < data.size()) {
        const std::size_t nl = data.find('\n', pos);
        const bool last = nl == std::string::npos;
        const std::string line = data.substr(pos, last ? std::string::npos : nl - pos);
        ++lineno;
        const bool final_piece = last || nl + 1 == data.size();
        try {
            if (last)
                throw domain_error("unterminated line");
            auto v = interval_from_json(nlohmann::json::parse(line));
            scan.records.push_back(std::move(v));
            scan.lines.push_back(line);
        } catch (const std::exception& e) {
            if (!final_piece)
                throw integrity_error(path + ": corrupt record at line " + std::to_string(lineno) + ": " + e.what());
            scan.torn_tail = true;
            break;
        }
        pos = nl + 1;
        scan.valid_bytes = pos;
    }
    return scan;
}

/// Next n to verify: 1 + max complete n, or `range_start` for an empty or
/// absent checkpoint.
inline Natural resume(const std::string& path, const Natural& range_start = 0)
{
    const auto scan = read_checkpoint(path);
    if (scan.records.empty())
        return range_start;
    Natural m = scan.records.front().n;
    for (const auto& r : scan.records)
        m = std::max(m, r.n);
    return m + 1;
}

// Append-only writer; cuts a torn tail before the first write.
class CheckpointWriter {
public:
    CheckpointWriter(const std::string& path, std::uint64_t valid_bytes)
    {
        fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT, 0644);
        if (fd_ < 0)
            throw resource_error("cannot open checkpoint " + path);
        if (::ftruncate(fd_, static_cast<off_t>(valid_bytes)) != 0 ||
            ::lseek(fd_, 0, SEEK_END) < 0) {
            ::close(fd_);
            throw resource_error("cannot prepare checkpoint " + path);
        }
    }
    CheckpointWriter(const CheckpointWriter&) = delete;
    CheckpointWriter& operator=(const CheckpointWriter&) = delete;
    ~CheckpointWriter()
    {
        if (fd_ >= 0)
            ::close(fd_);
    }

    void append(const std::string& text)
    {
        std::size_t done = 0;
        while (done < text.size()) {
            const ssize_t w = ::write(fd_, text.data() + done, text.size() - done);
            if (w < 0)
                throw resource_error("checkpoint write failed");
            done += static_cast<std::size_t>(w);
        }
    }

    void sync()
    {
        if (::fsync(fd_) != 0)
            throw resource_error("checkpoint fsync failed");
    }

private:
    int fd_ = -1;
};

struct RangeReport {
    Natural n_from;
    Natural n_to; // exclusive
    std::uint64_t verified = 0;
    std::vector<Natural> failed;
    std::map<std::string, std::uint64_t> stages;
    double mean_tests = 0;
    double wall_seconds = 0;
};

/// Summarises the records with n_from <= n < n_to; n values without a record
/// count as failed so verified + |failed| = n_to - n_from always holds.
inline RangeReport summarize(const std::vector<VerifiedInterval>& records, const Natural& n_from,
                             const Natural& n_to)
{
    RangeReport rep;
    rep.n_from = n_from;
    rep.n_to = n_to;
    for (const char* s : {"ap-candidate", "r-only", "full-scan", "failed"})
        rep.stages[s] = 0;
    std::map<Natural, const VerifiedInterval*> by_n;
    for (const auto& r : records)
        if (r.n >= n_from && r.n < n_to)
            by_n.emplace(r.n, &r);
    std::uint64_t tests = 0;
    for (Natural n = n_from; n < n_to; ++n) {
        auto it = by_n.find(n);
        if (it == by_n.end()) {
            rep.failed.push_back(n);
            continue;
        }
        const VerifiedInterval& v = *it->second;
        ++rep.stages[stage_name(v.stage)];
        tests += v.tests_used;
        if (v.stage == Stage::failed)
            rep.failed.push_back(n);
        else
            ++rep.verified;
    }
    const std::uint64_t seen = rep.stages["ap-candidate"] + rep.stages["r-only"] + rep.stages["full-scan"] +
                               rep.stages["failed"];
    rep.mean_tests = seen ? static_cast<double>(tests) / static_cast<double>(seen) : 0.0;
    return rep;
}

inline nlohmann::json to_json(const RangeReport& r, bool with_wall_time = true)
{
    nlohmann::json failed = nlohmann::json::array();
    for (const auto& n : r.failed)
        failed.push_back(to_decimal(n));
    char mean[32];
    std::snprintf(mean, sizeof(mean), "%.6f", r.mean_tests);
    nlohmann::json j = {{"n_from", to_decimal(r.n_from)},
                        {"n_to", to_decimal(r.n_to)},
                        {"verified", r.verified},
                        {"failed", failed},
                        {"stages", r.stages},
                        {"mean_tests", mean}};
    if (with_wall_time)
        j["wall_seconds"] = r.wall_seconds;
    return j;
}

struct RangeOptions {
    EngineConfig engine;
    unsigned threads = 1;
    std::optional<std::string> checkpoint;
    std::function<void(const std::string&)> log;
};

struct RangeBatch {
    Natural start;
    std::uint64_t len = 0;
};

/// Batches covering [n_from, n_to), anchored at n_from so the same range
/// always splits the same way regardless of interruptions.
inline std::vector<RangeBatch> range_batches(const Natural& n_from, const Natural& n_to, const EngineConfig& cfg)
{
    std::vector<RangeBatch> out;
    Natural b = n_from;
    while (b < n_to) {
        std::uint64_t len = batch_length(b, cfg);
        const Natural left = n_to - b;
        if (left < len)
            len = to_u64(left);
        out.push_back({b, len});
        b += len;
    }
    return out;
}

/// Verifies every interval n in [n_from, n_to). With a checkpoint, intervals
/// already recorded are kept and only batches with missing n are recomputed;
/// new records are appended in ascending order.
inline RangeReport verify_range(const Natural& n_from, const Natural& n_to, const RangeOptions& opt)
{
    if (n_from < 1 || n_to < n_from)
        throw domain_error("verify_range: need 1 <= n_from <= n_to");
    if (opt.engine.alpha < 2)
        throw domain_error("verify_range: alpha must be an integer >= 2");
    const auto t0 = std::chrono::steady_clock::now();

    CheckpointScan scan;
    if (opt.checkpoint) {
        scan = read_checkpoint(*opt.checkpoint);
        if (scan.torn_tail && opt.log)
            opt.log("checkpoint: dropping torn trailing line");
    }
    std::set<Natural> done;
    for (const auto& r : scan.records)
        done.insert(r.n);

    struct Job {
        RangeBatch batch;
        std::vector<Natural> missing;
    };
    std::vector<Job> jobs;
    for (const auto& b : range_batches(n_from, n_to, opt.engine)) {
        Job j{b, {}};
        for (std::uint64_t i = 0; i < b.len; ++i) {
            Natural n = b.start + i;
            if (!done.count(n))
                j.missing.push_back(std::move(n));
        }
        if (!j.missing.empty())
            jobs.push_back(std::move(j));
    }

    std::vector<VerifiedInterval> fresh;
    if (!jobs.empty()) {
        const PrimeTable table = engine_table(opt.engine);
        std::optional<CheckpointWriter> writer;
        if (opt.checkpoint)
            writer.emplace(*opt.checkpoint, scan.valid_bytes);

        std::vector<std::optional<std::vector<VerifiedInterval>>> results(jobs.size());
        std::mutex mu;
        std::condition_variable cv;
        std::atomic<std::size_t> next{0};
        std::exception_ptr worker_error;

        auto worker = [&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= jobs.size())
                    return;
                std::vector<VerifiedInterval> out;
                try {
                    // The whole batch is recomputed so its plan matches an
                    // uninterrupted run; only missing n are kept.
                    auto all = verify_batch(jobs[i].batch.start, jobs[i].batch.len, opt.engine, table);
                    for (auto& v : all)
                        if (std::binary_search(jobs[i].missing.begin(), jobs[i].missing.end(), v.n))
                            out.push_back(std::move(v));
                } catch (...) {
                    std::lock_guard lk(mu);
                    if (!worker_error)
                        worker_error = std::current_exception();
                    next = jobs.size();
                    cv.notify_all();
                    return;
                }
                std::lock_guard lk(mu);
                results[i] = std::move(out);
                cv.notify_all();
            }
        };

        const unsigned nthreads = std::max(1u, std::min<unsigned>(opt.threads, static_cast<unsigned>(jobs.size())));
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < nthreads; ++t)
            pool.emplace_back(worker);

        // The orchestrator alone writes, strictly in batch order.
        for (std::size_t i = 0; i < jobs.size(); ++i) {
            std::vector<VerifiedInterval> batch;
            {
                std::unique_lock lk(mu);
                cv.wait(lk, [&] { return results[i].has_value() || worker_error; });
                if (worker_error)
                    break;
                batch = std::move(*results[i]);
                results[i].reset();
            }
            if (writer) {
                std::string text;
                for (const auto& v : batch)
                    text += checkpoint_line(v);
                writer->append(text);
                writer->sync();
            }
            if (opt.log) {
                std::size_t bad = 0;
                for (const auto& v : batch)
                    bad += v.stage == Stage::failed;
                opt.log("batch " + to_decimal(jobs[i].batch.start) + " +" + std::to_string(jobs[i].batch.len) +
                        ": " + std::to_string(batch.size()) + " verified" +
                        (bad ? ", " + std::to_string(bad) + " FAILED" : std::string()));
            }
            for (auto& v : batch)
                fresh.push_back(std::move(v));
        }
        for (auto& th : pool)
            th.join();
        if (worker_error)
            std::rethrow_exception(worker_error);
    }

    // The report reflects the checkpoint content, not just this session.
    std::vector<VerifiedInterval> all;
    if (opt.checkpoint)
        all = read_checkpoint(*opt.checkpoint).records;
    else
        all = std::move(fresh);
    RangeReport rep = summarize(all, n_from, n_to);
    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

struct AuditFailure {
    std::size_t line = 0;
    std::string reason;
};

struct AuditReport {
    std::uint64_t records = 0;
    std::uint64_t certificates = 0;
    std::uint64_t certificates_ok = 0;
    std::vector<AuditFailure> failures;
    bool torn_tail = false;

    bool ok() const { return failures.empty() && certificates == certificates_ok; }
};

/// Re-derives every record from its serialised form: the JSON round trip must
/// be bit-exact, the certificate must verify, its n must be the recorded
/// prime, and the prime must lie in (n^alpha, (n+1)^alpha).
inline AuditReport audit_checkpoint(const std::string& path, unsigned alpha)
{
    AuditReport rep;
    const auto scan = read_checkpoint(path);
    rep.torn_tail = scan.torn_tail;
    for (std::size_t i = 0; i < scan.records.size(); ++i) {
        const auto& v = scan.records[i];
        ++rep.records;
        auto fail = [&](std::string why) { rep.failures.push_back({i + 1, std::move(why)}); };
        if (to_json(v).dump() != scan.lines[i]) {
            fail("round trip differs");
            continue;
        }
        if (v.stage == Stage::failed) {
            if (v.certificate)
                fail("failed record carries a certificate");
            continue;
        }
        if (!v.certificate) {
            fail("verified record without certificate");
            continue;
        }
        ++rep.certificates;
        if (!verify_certificate(*v.certificate)) {
            fail("certificate does not verify");
            continue;
        }
        if (v.certificate->n != v.prime) {
            fail("certificate is for a different number");
            continue;
        }
        if (!(v.prime > ipow(v.n, alpha) && v.prime < ipow(v.n + 1, alpha))) {
            fail("prime outside its interval");
            continue;
        }
        ++rep.certificates_ok;
    }
    return rep;
}

inline nlohmann::json to_json(const AuditReport& a)
{
    nlohmann::json f = nlohmann::json::array();
    for (const auto& x : a.failures)
        f.push_back({{"line", x.line}, {"reason", x.reason}});
    return {{"records", a.records},
            {"certificates", a.certificates},
            {"certificates_ok", a.certificates_ok},
            {"torn_tail", a.torn_tail},
            {"failures", f},
            {"ok", a.ok()}};
}

} // namespace gapforge

#endif
