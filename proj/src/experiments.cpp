#include "adsched/experiments.hpp"

#include <algorithm>
#include <stdexcept>

namespace adsched {
namespace experiments {

Mat synthetic_P_raw() {
    return Mat::from_rows({{0.2, 0.1, 0.7},
                           {0.1, 0.1, 0.8},
                           {0.0, 0.1, 0.9}});
}

Vec synthetic_g() { return {12.0, 7.0, 2.0}; }
Vec synthetic_r() { return {9.0, 3.0, 1.0}; }

Mat youtube_P_raw() {
    return Mat::from_rows({{0.94, 0.06, 0.00, 0.00, 0.00},
                           {0.02, 0.94, 0.04, 0.00, 0.00},
                           {0.00, 0.02, 0.96, 0.02, 0.00},
                           {0.00, 0.00, 0.06, 0.91, 0.03},
                           {0.00, 0.00, 0.00, 0.01, 0.99}});
}

Vec youtube_g() { return {184.0, 139.0, 102.0, 66.0, 37.0}; }

Mat twitch_P_raw() {
    return Mat::from_rows({{0.97, 0.03, 0.00, 0.00, 0.00},
                           {0.01, 0.96, 0.03, 0.00, 0.00},
                           {0.00, 0.02, 0.95, 0.03, 0.00},
                           {0.00, 0.00, 0.02, 0.96, 0.01},
                           {0.00, 0.00, 0.00, 0.02, 0.98}});
}

Vec twitch_g() { return {55.24, 42.40, 34.65, 28.30, 20.6}; }

Mat buzz_P_raw() {
    return Mat::from_rows({{1.0, 0.0},
                           {0.1462, 0.8538}});
}

Mat buzz_B_raw() {
    return Mat::from_rows({{0.1489, 0.4467, 0.4044},
                           {0.3727, 0.5325, 0.0947}});
}

Vec buzz_r() { return {10.0, 1.0}; }

namespace {

Mat renormalized(Mat m) {
    for (int i = 0; i < m.rows; ++i) {
        double s = 0.0;
        for (int j = 0; j < m.cols; ++j) s += m(i, j);
        if (s <= 0.0) throw std::logic_error("empty row in embedded table");
        for (int j = 0; j < m.cols; ++j) m(i, j) /= s;
    }
    return m;
}

Vec uniform_belief(int S) { return Vec(S, 1.0 / S); }

}  // namespace

HmmModel synthetic_model() {
    return HmmModel::poisson(renormalized(synthetic_P_raw()), uniform_belief(3), synthetic_g());
}

HmmModel youtube_model() {
    return HmmModel::poisson(renormalized(youtube_P_raw()), uniform_belief(5), youtube_g());
}

HmmModel twitch_model() {
    return HmmModel::poisson(renormalized(twitch_P_raw()), uniform_belief(5), twitch_g());
}

HmmModel buzz_model() {
    return HmmModel::categorical(renormalized(buzz_P_raw()), Vec{0.0, 1.0},
                                 renormalized(buzz_B_raw()));
}

StopProblem synthetic_problem(double rho, int L) {
    StopProblem p{synthetic_model(), synthetic_r(), L, rho, {}};
    p.validate();
    return p;
}

StopProblem youtube_problem(double rho, int L) {
    StopProblem p{youtube_model(), youtube_g(), L, rho, {}};
    p.validate();
    return p;
}

StopProblem twitch_problem(double rho, int L) {
    StopProblem p{twitch_model(), twitch_g(), L, rho, {}};
    p.validate();
    return p;
}

StopProblem buzz_problem(double rho) {
    StopProblem p{buzz_model(), buzz_r(), 1, rho, {}};
    p.validate();
    return p;
}

std::vector<std::string> names() { return {"synthetic", "youtube", "twitch", "buzz-change"}; }

bool is_known(const std::string& name) {
    auto n = names();
    return std::find(n.begin(), n.end(), name) != n.end();
}

}  // namespace experiments
}  // namespace adsched
