#pragma once

#include <doctest.h>

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <ostream>

// Like doctest::Approx, but the scale term defaults to 0 so tolerances are
// purely relative, and the comparison is inclusive so exact zeros match.
class approx {
public:
    explicit approx(double value) : value_(value) {}

    approx& epsilon(double e) {
        eps_ = e;
        return *this;
    }
    approx& scale(double s) {
        scale_ = s;
        return *this;
    }

    friend bool operator==(double lhs, const approx& rhs) {
        const double tol = rhs.eps_ * (rhs.scale_ + std::max(std::abs(lhs), std::abs(rhs.value_)));
        return std::abs(lhs - rhs.value_) <= tol;
    }
    friend bool operator==(const approx& lhs, double rhs) { return rhs == lhs; }
    friend bool operator!=(double lhs, const approx& rhs) { return !(lhs == rhs); }
    friend bool operator!=(const approx& lhs, double rhs) { return !(rhs == lhs); }

    friend std::ostream& operator<<(std::ostream& os, const approx& a) {
        return os << "approx(" << a.value_ << ", eps " << a.eps_ << ")";
    }

private:
    double value_;
    double eps_ = FLT_EPSILON * 100;
    double scale_ = 0.0;
};
