#pragma once

#include <vector>

#include "futilsim/figures.hpp"
#include "futilsim/model.hpp"

namespace fx {

inline futilsim::TrialDesign two_subgroup_binary(int n = 300) {
  auto d = futilsim::binary_trial_design();
  d.total_n = n;
  return d;
}

inline futilsim::PatientRecord rec(int id, int subgroup, futilsim::Arm arm, double y, int site = 0) {
  futilsim::PatientRecord r;
  r.id = id;
  r.subgroup_index = subgroup;
  r.site_index = site;
  r.arm = arm;
  r.outcome = y;
  r.in_ia = true;
  r.baseline_available = true;
  return r;
}

}  // namespace fx
