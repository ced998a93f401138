// kernels.hpp
//
// Data-parallel inner loops. Every kernel has a serial reference path and
// an OpenMP path; both must produce identical results, which the tests
// check directly.

#ifndef SENTINEL_KERNELS_HPP
#define SENTINEL_KERNELS_HPP

#include <optional>
#include <span>
#include <vector>

#include "sentinel/anomaly.hpp"
#include "sentinel/fabric.hpp"
#include "sentinel/secfn.hpp"

namespace sentinel::kernels {

enum class Execution { serial, parallel };

int max_threads();

/// chi-square score of every feature column against the labels
std::vector<double> chi_square_scores(const anomaly::BinnedDataset &d, Execution exec);

/// first matching signature index per packet
std::vector<std::optional<std::size_t>> scan_batch(std::span<const secfn::Signature> sigs,
                                                   std::span<const fabric::Packet> packets, Execution exec);

/// IMF audits of many (trusted, observed) pairs
std::vector<secfn::AuditResult> audit_batch(std::span<const fabric::TrustedReport> trusted,
                                            std::span<const fabric::SwitchStateReport> observed, Execution exec);

} // namespace sentinel::kernels

#endif // SENTINEL_KERNELS_HPP
