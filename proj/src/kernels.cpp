#include "sentinel/kernels.hpp"

#ifdef SENTINEL_HAVE_OPENMP
#include <omp.h>
#endif

namespace sentinel::kernels {

int max_threads() {
#ifdef SENTINEL_HAVE_OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

std::vector<double> chi_square_scores(const anomaly::BinnedDataset &d, Execution exec) {
    const auto n = static_cast<long>(d.arity());
    std::vector<double> scores(d.arity(), 0.0);
    if (exec == Execution::serial) {
        for (long j = 0; j < n; ++j) {
            auto col = d.column(static_cast<std::size_t>(j));
            scores[j] = anomaly::chi_square_score(col, d.labels);
        }
        return scores;
    }
#pragma omp parallel for schedule(dynamic)
    for (long j = 0; j < n; ++j) {
        auto col = d.column(static_cast<std::size_t>(j));
        scores[j] = anomaly::chi_square_score(col, d.labels);
    }
    return scores;
}

std::vector<std::optional<std::size_t>> scan_batch(std::span<const secfn::Signature> sigs,
                                                   std::span<const fabric::Packet> packets, Execution exec) {
    const auto n = static_cast<long>(packets.size());
    std::vector<std::optional<std::size_t>> hits(packets.size());
    if (exec == Execution::serial) {
        for (long i = 0; i < n; ++i) hits[i] = secfn::scan_signatures(sigs, packets[i]);
        return hits;
    }
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) hits[i] = secfn::scan_signatures(sigs, packets[i]);
    return hits;
}

std::vector<secfn::AuditResult> audit_batch(std::span<const fabric::TrustedReport> trusted,
                                            std::span<const fabric::SwitchStateReport> observed, Execution exec) {
    if (trusted.size() != observed.size()) throw Error{Errc::invalid_argument, "audit batch size mismatch"};
    const auto n = static_cast<long>(trusted.size());
    std::vector<secfn::AuditResult> out(trusted.size());
    if (exec == Execution::serial) {
        for (long i = 0; i < n; ++i) out[i] = secfn::imf_audit(trusted[i], observed[i]);
        return out;
    }
    // imf_audit throws on node mismatch; surface the first failure after the loop
    std::vector<std::string> errors(trusted.size());
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < n; ++i) {
        try {
            out[i] = secfn::imf_audit(trusted[i], observed[i]);
        } catch (const Error &e) {
            errors[i] = e.what();
        }
    }
    for (const auto &e : errors) {
        if (!e.empty()) throw Error{Errc::node_mismatch, e};
    }
    return out;
}

} // namespace sentinel::kernels
