// Copyright 2026 The qsbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "qsb/common.hpp"

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace qsb {

/// Ridge regression with an unpenalized intercept, solved through the p x p
/// normal equations of the centered design.
struct RidgeModel {
    Eigen::VectorXd weights;
    double intercept = 0.0;
    double alpha = 0.0;
    bool fit_intercept = true;
    bool jittered = false;  // alpha = 0 on a rank-deficient design
};

inline constexpr double kRidgeJitter = 1e-10;

RidgeModel fit_ridge(const Eigen::MatrixXd& H, const Eigen::VectorXd& y, double alpha, bool fit_intercept = true);
Eigen::VectorXd predict_ridge(const RidgeModel& model, const Eigen::MatrixXd& H);

/// sum (y - Hw - b)^2 + alpha |w|^2
double ridge_objective(const Eigen::MatrixXd& H, const Eigen::VectorXd& y, const Eigen::VectorXd& w, double b,
                       double alpha);

struct GlobalMeanModel {
    double mean = 0.0;
};
GlobalMeanModel baseline_global_mean(std::span<const double> y);
std::vector<double> predict_global_mean(const GlobalMeanModel& m, std::size_t n);

struct ConditionMeansModel {
    double sham_mean = 0.0;
    double cs_mean = 0.0;
};
ConditionMeansModel baseline_condition_means(std::span<const double> y, std::span<const int> c);
std::vector<double> predict_condition_means(const ConditionMeansModel& m, std::span<const int> c);

struct LDAAxis {
    Eigen::VectorXd direction;  // unit norm, or all zeros when flagged
    Eigen::VectorXd mean_sham;
    Eigen::VectorXd mean_cs;
    double shrinkage = 0.05;
    bool zero_direction = false;
    bool shrinkage_raised = false;
};

inline constexpr double kDefaultLdaShrinkage = 0.05;

/// Direction proportional to Sigma^-1 (mu_cs - mu_sham), with the pooled
/// covariance shrunk toward (tr/p) I. Oriented so CS scores higher.
LDAAxis fit_lda_axis(const Eigen::MatrixXd& X, std::span<const int> c, double shrinkage = kDefaultLdaShrinkage);
Eigen::VectorXd project_lda(const LDAAxis& axis, const Eigen::MatrixXd& X);

/// LDA condition axis followed by ridge on the one-dimensional score.
struct LdaRidgeModel {
    LDAAxis axis;
    RidgeModel ridge;
};
LdaRidgeModel fit_lda_ridge(const Eigen::MatrixXd& X, std::span<const int> c, const Eigen::VectorXd& y, double alpha,
                            double shrinkage = kDefaultLdaShrinkage);
Eigen::VectorXd predict_lda_ridge(const LdaRidgeModel& m, const Eigen::MatrixXd& X);

}  // namespace qsb
