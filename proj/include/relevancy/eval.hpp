#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "relevancy/corpus.hpp"
#include "relevancy/jsonl.hpp"

namespace relevancy {

struct ConfusionMatrix {
  std::size_t true_negative = 0;
  std::size_t false_positive = 0;
  std::size_t false_negative = 0;
  std::size_t true_positive = 0;

  std::size_t total() const {
    return true_negative + false_positive + false_negative + true_positive;
  }
  bool operator==(const ConfusionMatrix&) const = default;
};

struct MetricsReport {
  double accuracy = 0;
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  ConfusionMatrix matrix;
};

// "relevant" is the positive class.
ConfusionMatrix confusion(std::span<const Label> predictions,
                          std::span<const Label> truths);

// 0/0 ratios are defined as 0.
MetricsReport metrics(const ConfusionMatrix& matrix);

Json to_json(const ConfusionMatrix& m);
Json to_json(const MetricsReport& r);

// Percentages to one decimal place, F1 to three.
std::string format_percent(double ratio);
std::string format_f1(double f1);

}  // namespace relevancy
