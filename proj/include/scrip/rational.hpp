#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <string_view>

#include "scrip/error.hpp"

namespace scrip {

// Exact rational on int64 with overflow detection. Kept normalized:
// denominator > 0, gcd(num, den) == 1. Intermediates run through __int128 so
// products and cross-multiplied comparisons never wrap silently.
class Rational {
  public:
    constexpr Rational() = default;
    Rational(long long num, long long den) { assign(num, den); }
    explicit Rational(long long value) : num_(value), den_(1) {}

    long long num() const { return num_; }
    long long den() const { return den_; }

    bool is_zero() const { return num_ == 0; }
    double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

    std::string str() const {
        if (den_ == 1) return std::to_string(num_);
        return std::to_string(num_) + "/" + std::to_string(den_);
    }

    Rational reciprocal() const {
        if (num_ == 0) throw RangeError("reciprocal of zero");
        return Rational(den_, num_);
    }

    friend Rational operator+(const Rational& a, const Rational& b) {
        __int128 n = w(a.num_) * b.den_ + w(b.num_) * a.den_;
        __int128 d = w(a.den_) * b.den_;
        return from_wide(n, d);
    }
    friend Rational operator-(const Rational& a, const Rational& b) {
        __int128 n = w(a.num_) * b.den_ - w(b.num_) * a.den_;
        __int128 d = w(a.den_) * b.den_;
        return from_wide(n, d);
    }
    friend Rational operator*(const Rational& a, const Rational& b) {
        return from_wide(w(a.num_) * b.num_, w(a.den_) * b.den_);
    }
    friend Rational operator/(const Rational& a, const Rational& b) {
        if (b.num_ == 0) throw RangeError("rational division by zero");
        return from_wide(w(a.num_) * b.den_, w(a.den_) * b.num_);
    }
    Rational& operator+=(const Rational& o) { return *this = *this + o; }
    Rational& operator-=(const Rational& o) { return *this = *this - o; }
    Rational& operator*=(const Rational& o) { return *this = *this * o; }
    Rational& operator/=(const Rational& o) { return *this = *this / o; }
    Rational operator-() const {
        Rational r;
        r.num_ = -num_;
        r.den_ = den_;
        return r;
    }

    friend bool operator==(const Rational& a, const Rational& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }
    friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
    friend bool operator<(const Rational& a, const Rational& b) {
        return w(a.num_) * b.den_ < w(b.num_) * a.den_;
    }
    friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
    friend bool operator<=(const Rational& a, const Rational& b) { return !(b < a); }
    friend bool operator>=(const Rational& a, const Rational& b) { return !(a < b); }

    // Accepts "p/q", plain integers, and decimal literals ("0.2" -> 1/5).
    // Decimal parsing is exact, so command-line probabilities keep the
    // rational form the mechanism requires.
    static Rational parse(std::string_view text) {
        if (text.empty()) throw IrrationalReward("empty rational literal");
        auto slash = text.find('/');
        if (slash != std::string_view::npos) {
            long long p = parse_int(text.substr(0, slash));
            long long q = parse_int(text.substr(slash + 1));
            if (q == 0) throw IrrationalReward("zero denominator");
            return Rational(p, q);
        }
        auto dot = text.find('.');
        if (dot == std::string_view::npos) return Rational(parse_int(text));
        bool neg = !text.empty() && text.front() == '-';
        std::string_view ip = text.substr(neg ? 1 : 0, dot - (neg ? 1 : 0));
        std::string_view fp = text.substr(dot + 1);
        if (fp.size() > 18) throw IrrationalReward("decimal literal too long: " + std::string(text));
        long long whole = ip.empty() ? 0 : parse_int(ip);
        long long frac = fp.empty() ? 0 : parse_int(fp);
        long long scale = 1;
        for (size_t i = 0; i < fp.size(); ++i) {
            if (scale > std::numeric_limits<long long>::max() / 10)
                throw IrrationalReward("decimal literal too long: " + std::string(text));
            scale *= 10;
        }
        __int128 n = w(whole) * scale + frac;
        if (neg) n = -n;
        return from_wide(n, scale);
    }

    // Recovers a small exact fraction from a double via continued fractions.
    // Throws IrrationalReward when no fraction with denominator <= max_den
    // reproduces the value to within a few ulps.
    static Rational from_double(double x, long long max_den = 1000000) {
        if (!std::isfinite(x)) throw IrrationalReward("non-finite probability");
        long long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
        double rem = x;
        for (int iter = 0; iter < 64; ++iter) {
            double fl = std::floor(rem);
            if (fl > 9e17 || fl < -9e17) break;
            long long a = static_cast<long long>(fl);
            __int128 p2 = w(a) * p1 + p0;
            __int128 q2 = w(a) * q1 + q0;
            if (q2 > max_den) break;
            p0 = p1;
            q0 = q1;
            p1 = static_cast<long long>(p2);
            q1 = static_cast<long long>(q2);
            Rational cand(p1, q1);
            if (std::abs(cand.to_double() - x) <= 4 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x)))
                return cand;
            double frac = rem - fl;
            if (frac < 1e-15) break;
            rem = 1.0 / frac;
        }
        throw IrrationalReward("no exact rational with denominator <= " + std::to_string(max_den));
    }

  private:
    long long num_ = 0;
    long long den_ = 1;

    static __int128 w(long long v) { return static_cast<__int128>(v); }

    static Rational from_wide(__int128 n, __int128 d) {
        if (d == 0) throw RangeError("rational with zero denominator");
        if (d < 0) {
            n = -n;
            d = -d;
        }
        __int128 g = gcd_wide(n < 0 ? -n : n, d);
        if (g > 1) {
            n /= g;
            d /= g;
        }
        constexpr __int128 lo = std::numeric_limits<long long>::min();
        constexpr __int128 hi = std::numeric_limits<long long>::max();
        if (n < lo || n > hi || d > hi) throw RationalOverflow("rational out of 64-bit range");
        Rational r;
        r.num_ = static_cast<long long>(n);
        r.den_ = static_cast<long long>(d);
        return r;
    }

    static __int128 gcd_wide(__int128 a, __int128 b) {
        while (b != 0) {
            __int128 t = a % b;
            a = b;
            b = t;
        }
        return a == 0 ? 1 : a;
    }

    static long long parse_int(std::string_view s) {
        if (s.empty()) throw IrrationalReward("malformed rational literal");
        bool neg = s.front() == '-';
        size_t i = neg ? 1 : 0;
        if (i >= s.size()) throw IrrationalReward("malformed rational literal");
        long long v = 0;
        for (; i < s.size(); ++i) {
            char c = s[i];
            if (c < '0' || c > '9') throw IrrationalReward("malformed rational literal: " + std::string(s));
            if (v > (std::numeric_limits<long long>::max() - (c - '0')) / 10)
                throw RationalOverflow("integer literal out of range");
            v = v * 10 + (c - '0');
        }
        return neg ? -v : v;
    }

    void assign(long long n, long long d) { *this = from_wide(w(n), w(d)); }
};

}  // namespace scrip
