#include "qmcmc/ledger.hpp"

#include <limits>

namespace qmcmc {

std::uint64_t saturating_add(std::uint64_t a, std::uint64_t b) {
  const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
  return (a > max - b) ? max : a + b;
}

std::uint64_t LedgerCounters::gradient_total() const { return saturating_add(grad_c, grad_q); }
std::uint64_t LedgerCounters::eval_total() const { return saturating_add(eval_c, eval_q); }
std::uint64_t LedgerCounters::total() const {
  return saturating_add(gradient_total(), eval_total());
}

LedgerCounters& LedgerCounters::operator+=(const LedgerCounters& o) {
  grad_c = saturating_add(grad_c, o.grad_c);
  grad_q = saturating_add(grad_q, o.grad_q);
  eval_c = saturating_add(eval_c, o.eval_c);
  eval_q = saturating_add(eval_q, o.eval_q);
  return *this;
}

void QueryLedger::charge_grad_classical(std::uint64_t k) {
  auto& c = current();
  c.grad_c = saturating_add(c.grad_c, k);
}
void QueryLedger::charge_grad_quantum(std::uint64_t k) {
  auto& c = current();
  c.grad_q = saturating_add(c.grad_q, k);
}
void QueryLedger::charge_eval_classical(std::uint64_t k) {
  auto& c = current();
  c.eval_c = saturating_add(c.eval_c, k);
}
void QueryLedger::charge_eval_quantum(std::uint64_t k) {
  auto& c = current();
  c.eval_q = saturating_add(c.eval_q, k);
}

void QueryLedger::record_emulation_draws(std::uint64_t k) {
  emulation_draws_ = saturating_add(emulation_draws_, k);
}

LedgerCounters QueryLedger::totals() const {
  LedgerCounters t;
  for (const auto& [_, c] : phases_) t += c;
  return t;
}

void QueryLedger::merge(const QueryLedger& other) {
  for (const auto& [label, c] : other.phases_) phases_[label] += c;
  emulation_draws_ = saturating_add(emulation_draws_, other.emulation_draws_);
}

nlohmann::json QueryLedger::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [label, c] : phases_) {
    j[label] = {{"grad_c", c.grad_c}, {"grad_q", c.grad_q}, {"eval_c", c.eval_c},
                {"eval_q", c.eval_q}};
  }
  return j;
}

QueryLedger QueryLedger::from_json(const nlohmann::json& j) {
  QueryLedger l;
  for (const auto& [label, c] : j.items()) {
    LedgerCounters k;
    k.grad_c = c.at("grad_c").get<std::uint64_t>();
    k.grad_q = c.at("grad_q").get<std::uint64_t>();
    k.eval_c = c.at("eval_c").get<std::uint64_t>();
    k.eval_q = c.at("eval_q").get<std::uint64_t>();
    l.phases_[label] = k;
  }
  return l;
}

}  // namespace qmcmc
