#pragma once

#include <quadplate/errors.hpp>
#include <quadplate/mapping.hpp>

#include <cmath>
#include <string>
#include <vector>

namespace quadplate {

/// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
    int order = 0;
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Tabulated Gauss-Legendre rule, 1 <= n <= 6.
inline GaussRule gauss_rule(int n) {
    GaussRule r;
    r.order = n;
    auto sym = [&r](double x, double w) {
        if (x == 0.0) {
            r.nodes.push_back(0.0);
            r.weights.push_back(w);
        } else {
            r.nodes.insert(r.nodes.begin(), -x);
            r.weights.insert(r.weights.begin(), w);
            r.nodes.push_back(x);
            r.weights.push_back(w);
        }
    };
    switch (n) {
    case 1: sym(0.0, 2.0); break;
    case 2: sym(1.0 / std::sqrt(3.0), 1.0); break;
    case 3:
        sym(0.0, 8.0 / 9.0);
        sym(std::sqrt(3.0 / 5.0), 5.0 / 9.0);
        break;
    case 4: {
        const double s = 2.0 / 7.0 * std::sqrt(6.0 / 5.0);
        sym(std::sqrt(3.0 / 7.0 - s), (18.0 + std::sqrt(30.0)) / 36.0);
        sym(std::sqrt(3.0 / 7.0 + s), (18.0 - std::sqrt(30.0)) / 36.0);
        break;
    }
    case 5: {
        const double s = 2.0 * std::sqrt(10.0 / 7.0);
        sym(0.0, 128.0 / 225.0);
        sym(std::sqrt(5.0 - s) / 3.0, (322.0 + 13.0 * std::sqrt(70.0)) / 900.0);
        sym(std::sqrt(5.0 + s) / 3.0, (322.0 - 13.0 * std::sqrt(70.0)) / 900.0);
        break;
    }
    case 6:
        // no closed form in radicals
        sym(0.238619186083196908630501721681, 0.467913934572691047389870343990);
        sym(0.661209386466264513661399595020, 0.360761573048138607569833513838);
        sym(0.932469514203152027812301554494, 0.171324492379170345040296142173);
        break;
    default: throw InputError("Gauss order must be in 1..6, got " + std::to_string(n));
    }
    return r;
}

/// Visits every tensor-product point: f(theta, weight).
template <class F>
void for_each_gauss_point(const GaussRule& rule, F&& f) {
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
        for (std::size_t j = 0; j < rule.nodes.size(); ++j)
            f(NaturalPoint(rule.nodes[i], rule.nodes[j]), rule.weights[i] * rule.weights[j]);
}

/**
 * Integral of a scalar field over the mapped element,
 * sum_ij w_i w_j f(theta_ij, x(theta_ij)) det J(theta_ij).
 *
 * `f` is called as f(const NaturalPoint&, const Point&).
 */
template <class F>
double integrate_element(const MappingScheme& scheme, F&& f, const GaussRule& rule) {
    double sum = 0.0;
    for_each_gauss_point(rule, [&](const NaturalPoint& t, double w) {
        const Jacobian j = jacobian(scheme, t);
        sum += w * f(t, map_point(scheme, t)) * j.det;
    });
    return sum;
}

/// Area and second moments about the global Cartesian axes through the origin.
struct SectionProperties {
    double area = 0.0;
    double I_x1 = 0.0;   ///< integral of (x~2)^2
    double I_x2 = 0.0;   ///< integral of (x~1)^2
    double I_x1x2 = 0.0; ///< integral of x~1 x~2
};

inline SectionProperties section_properties(const MappingScheme& scheme, const GaussRule& rule) {
    SectionProperties sp;
    for_each_gauss_point(rule, [&](const NaturalPoint& t, double w) {
        const double wd = w * jacobian(scheme, t).det;
        const Point x = map_point(scheme, t);
        sp.area += wd;
        sp.I_x1 += wd * x.y() * x.y();
        sp.I_x2 += wd * x.x() * x.x();
        sp.I_x1x2 += wd * x.x() * x.y();
    });
    return sp;
}

} // namespace quadplate
