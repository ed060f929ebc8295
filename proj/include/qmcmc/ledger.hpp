#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <string>

namespace qmcmc {

struct LedgerCounters {
  std::uint64_t grad_c = 0;
  std::uint64_t grad_q = 0;
  std::uint64_t eval_c = 0;
  std::uint64_t eval_q = 0;

  std::uint64_t gradient_total() const;
  std::uint64_t eval_total() const;
  std::uint64_t total() const;
  LedgerCounters& operator+=(const LedgerCounters& o);
  bool operator==(const LedgerCounters&) const = default;
};

// Query accounting, split by phase label. Counters saturate instead of wrapping.
class QueryLedger {
 public:
  QueryLedger() = default;

  const std::string& phase() const { return phase_; }
  void set_phase(std::string label) { phase_ = std::move(label); }

  void charge_grad_classical(std::uint64_t k);
  void charge_grad_quantum(std::uint64_t k);
  void charge_eval_classical(std::uint64_t k);
  void charge_eval_quantum(std::uint64_t k);

  // Classical draws spent emulating quantum mean estimation. Not a query count.
  void record_emulation_draws(std::uint64_t k);
  std::uint64_t emulation_draws() const { return emulation_draws_; }

  LedgerCounters totals() const;
  const std::map<std::string, LedgerCounters>& phases() const { return phases_; }

  void merge(const QueryLedger& other);

  // {phase -> {grad_c, grad_q, eval_c, eval_q}}
  nlohmann::json to_json() const;
  static QueryLedger from_json(const nlohmann::json& j);

  bool operator==(const QueryLedger& o) const {
    return phases_ == o.phases_ && emulation_draws_ == o.emulation_draws_;
  }

 private:
  LedgerCounters& current() { return phases_[phase_]; }

  std::string phase_ = "main";
  std::map<std::string, LedgerCounters> phases_;
  std::uint64_t emulation_draws_ = 0;
};

// Switches the ledger phase for the lifetime of the scope.
class PhaseScope {
 public:
  PhaseScope(QueryLedger& ledger, std::string label) : ledger_(ledger), saved_(ledger.phase()) {
    ledger_.set_phase(std::move(label));
  }
  ~PhaseScope() { ledger_.set_phase(saved_); }
  PhaseScope(const PhaseScope&) = delete;
  PhaseScope& operator=(const PhaseScope&) = delete;

 private:
  QueryLedger& ledger_;
  std::string saved_;
};

std::uint64_t saturating_add(std::uint64_t a, std::uint64_t b);

}  // namespace qmcmc
