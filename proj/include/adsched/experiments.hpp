#pragma once
#include <string>
#include <vector>

#include "adsched/stopping.hpp"

namespace adsched {
namespace experiments {

// Raw parameter tables for the built-in experiments, exactly as published.
// A couple of rows are off row-stochastic by the last printed digit; the
// model builders renormalize each row while these accessors stay verbatim.
Mat synthetic_P_raw();
Vec synthetic_g();
Vec synthetic_r();
Mat youtube_P_raw();
Vec youtube_g();
Mat twitch_P_raw();
Vec twitch_g();
Mat buzz_P_raw();
Mat buzz_B_raw();
Vec buzz_r();

HmmModel synthetic_model();  // uniform initial belief
HmmModel youtube_model();
HmmModel twitch_model();
HmmModel buzz_model();  // starts in the low-valuation state

StopProblem synthetic_problem(double rho = 0.9, int L = 5);
StopProblem youtube_problem(double rho = 0.9, int L = 5);  // r = g (unit click rate)
StopProblem twitch_problem(double rho = 0.9, int L = 5);
StopProblem buzz_problem(double rho = 0.9);  // L = 1

std::vector<std::string> names();
bool is_known(const std::string& name);

}  // namespace experiments
}  // namespace adsched
