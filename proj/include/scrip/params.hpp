#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

#include "scrip/error.hpp"
#include "scrip/rational.hpp"

namespace scrip {

enum class Setting { Inadvertent, Strategic };
enum class PaymentVariant { SinglePayer, SplitPayers };

inline const char* to_string(Setting s) {
    return s == Setting::Inadvertent ? "inadvertent" : "strategic";
}
inline const char* to_string(PaymentVariant v) {
    return v == PaymentVariant::SinglePayer ? "single" : "split";
}

// Raw record as supplied by a caller or the CLI; validate_params turns it into
// an immutable GameParams or rejects it.
struct GameParamsInput {
    int n = 0;
    Setting setting = Setting::Inadvertent;
    std::optional<Rational> bad_prob;   // b, inadvertent setting
    std::optional<Rational> beta_star;  // target violation probability, strategic setting
    double alpha = 0.0;                 // monitoring disutility
    double kappa = 0.0;                 // bad-post utility, strategic setting
    double delta = 0.0;                 // discount factor
    int k = 0;                          // volunteering threshold, whole tokens
    long long total_tokens = 0;         // scrip in circulation, whole tokens
    PaymentVariant variant = PaymentVariant::SinglePayer;
};

// Validated, immutable mechanism constants plus the derived exact-arithmetic
// quantities every other module relies on:
//
//   unit         base units per token; the smallest positive integer making
//                both one token and the detection reward integral
//   reward_units detection reward (1/b or 1/beta*) in base units
//   cap_units    maximum holding, k + reward tokens, in base units
//
// All token movement elsewhere happens in integer base units, so conservation
// is exact no matter how long a run gets.
class GameParams {
  public:
    GameParams() = default;  // empty placeholder; real instances come from validate_params

    int n() const { return n_; }
    Setting setting() const { return setting_; }
    bool strategic() const { return setting_ == Setting::Strategic; }
    // b in the inadvertent setting, beta* in the strategic one.
    const Rational& violation_prob() const { return violation_prob_; }
    double alpha() const { return alpha_; }
    double kappa() const { return kappa_; }
    double delta() const { return delta_; }
    int k() const { return k_; }
    long long total_tokens() const { return total_tokens_; }
    PaymentVariant variant() const { return variant_; }

    long long unit() const { return unit_; }
    long long reward_units() const { return reward_units_; }
    long long cap_units() const { return cap_units_; }
    long long k_units() const { return k_ * unit_; }
    long long total_units() const { return total_tokens_ * unit_; }
    // Holdings stay strictly below the cap in play (receipts require room for
    // a full token under the cap; the reward lands a below-threshold monitor
    // at most here).
    long long max_attainable_units() const { return cap_units_ - 1; }
    int max_attainable_token_bucket() const { return static_cast<int>(max_attainable_units() / unit_); }
    // Number of distinct single-token payers in the split variant.
    long long split_payer_count() const { return (reward_units_ + unit_ - 1) / unit_; }
    int cap_token_buckets() const { return static_cast<int>(cap_units_ / unit_) + 1; }
    double tokens_per_agent() const { return static_cast<double>(total_tokens_) / n_; }

    friend GameParams validate_params(const GameParamsInput& raw);

  private:
    int n_ = 0;
    Setting setting_ = Setting::Inadvertent;
    Rational violation_prob_;
    double alpha_ = 0, kappa_ = 0, delta_ = 0;
    int k_ = 0;
    long long total_tokens_ = 0;
    PaymentVariant variant_ = PaymentVariant::SinglePayer;
    long long unit_ = 1, reward_units_ = 0, cap_units_ = 0;
};

inline GameParams validate_params(const GameParamsInput& raw) {
    if (raw.n < 1) throw RangeError("n must be a positive integer");
    if (!(raw.alpha > 0.0 && raw.alpha < 1.0)) throw RangeError("alpha must lie in (0,1)");
    if (!(raw.delta > 0.0 && raw.delta < 1.0)) throw RangeError("delta must lie in (0,1)");
    if (raw.k < 0) throw RangeError("threshold k must be nonnegative");
    if (raw.total_tokens < 0) throw RangeError("total_tokens must be nonnegative");

    GameParams p;
    p.n_ = raw.n;
    p.setting_ = raw.setting;
    p.alpha_ = raw.alpha;
    p.delta_ = raw.delta;
    p.k_ = raw.k;
    p.total_tokens_ = raw.total_tokens;
    p.variant_ = raw.variant;

    if (raw.setting == Setting::Inadvertent) {
        if (!raw.bad_prob) throw RangeError("inadvertent setting requires b");
        if (raw.beta_star) throw RangeError("beta* applies only to the strategic setting");
        p.violation_prob_ = *raw.bad_prob;
        p.kappa_ = 0.0;
    } else {
        if (!raw.beta_star) throw RangeError("strategic setting requires beta*");
        if (raw.bad_prob) throw RangeError("b applies only to the inadvertent setting");
        if (!(raw.kappa > 1.0) || !std::isfinite(raw.kappa))
            throw RangeError("strategic setting requires kappa > 1");
        p.violation_prob_ = *raw.beta_star;
        p.kappa_ = raw.kappa;
    }

    const Rational& v = p.violation_prob_;
    if (!(v > Rational(0) && v < Rational(1)))
        throw RangeError("violation probability must lie strictly between 0 and 1");

    // v = num/den in lowest terms. One token = num base units makes the
    // reward den/num tokens equal to exactly den base units.
    p.unit_ = v.num();
    p.reward_units_ = v.den();
    long long reward_ceil_units = ((p.reward_units_ + p.unit_ - 1) / p.unit_) * p.unit_;
    // The split variant hands the monitor one whole token per payer, so its
    // ceiling-rounded reward sets the cap when the reward is fractional.
    p.cap_units_ = p.k_ * p.unit_ +
                   (p.variant_ == PaymentVariant::SplitPayers ? reward_ceil_units : p.reward_units_);

    if (p.total_units() > static_cast<long long>(p.n_) * p.cap_units_)
        throw RangeError("total tokens exceed what the population can hold");
    return p;
}

}  // namespace scrip
