// Writes a synthetic passenger table with the column layout of the public
// Titanic training file: 891 rows, 342 survivors, about 177 missing ages.
// Survival is driven by class, sex, age and siblings/spouses aboard; fare and
// parents/children have no direct effect.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

#include "tabsense/core/format.hpp"
#include "tabsense/core/random.hpp"

namespace {

constexpr int kRows = 891;
constexpr int kSurvivors = 342;
constexpr int kMissingAge = 177;

// Exact marginal counts of the public file, in random order.
std::vector<int> Shuffled(tabsense::Rng& rng, const std::vector<std::pair<int, int>>& counts) {
  std::vector<int> values;
  for (const auto& [value, n] : counts) values.insert(values.end(), n, value);
  rng.Shuffle(values);
  return values;
}

struct Passenger {
  int pclass = 3;
  bool female = false;
  double age = NAN;
  int sibsp = 0;
  int parch = 0;
  double fare = 0.0;
  char embarked = 'S';
  double score = 0.0;
};

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: %s OUT.csv\n", argv[0]);
    return 2;
  }
  tabsense::Rng rng(1912);
  static const char* kFirst[] = {"John", "William", "Mary", "Anna", "James", "Elin", "Karl", "Bridget",
                                 "Thomas", "Helen", "Johan", "Margaret"};
  static const char* kLast[] = {"Andersson", "Smith", "Brown", "Kelly", "Olsen", "Harris", "Nilsson",
                                "Walker", "Murphy", "Carter", "Jensen", "Ward"};

  std::vector<Passenger> people(kRows);
  std::vector<int> order(kRows);
  std::iota(order.begin(), order.end(), 0);
  rng.Shuffle(order);
  std::vector<bool> missing_age(kRows, false);
  for (int i = 0; i < kMissingAge; ++i) missing_age[order[i]] = true;

  const auto pclass = Shuffled(rng, {{1, 216}, {2, 184}, {3, 491}});
  const auto female = Shuffled(rng, {{1, 314}, {0, 577}});
  const auto sibsp = Shuffled(rng, {{0, 608}, {1, 209}, {2, 28}, {3, 16}, {4, 18}, {5, 5}, {8, 7}});
  const auto parch = Shuffled(rng, {{0, 678}, {1, 118}, {2, 80}, {3, 5}, {4, 4}, {5, 5}, {6, 1}});
  for (int i = 0; i < kRows; ++i) {
    Passenger& p = people[i];
    p.pclass = pclass[i];
    p.female = female[i] == 1;
    p.sibsp = sibsp[i];
    p.parch = parch[i];
    const double mean_age = p.pclass == 1 ? 38.0 : p.pclass == 2 ? 30.0 : 25.0;
    double age = rng.Uniform() < 0.08 ? rng.Uniform(0.42, 12.0) : mean_age + 13.0 * rng.Normal();
    age = std::clamp(age, 0.42, 80.0);
    age = age < 1.0 ? std::round(age * 100.0) / 100.0 : std::round(age);
    const double fare_median = p.pclass == 1 ? 20.0 : p.pclass == 2 ? 15.0 : 11.0;
    p.fare = std::min(512.3292, std::round(fare_median * std::exp(0.7 * rng.Normal()) * 1e4) / 1e4);
    p.embarked = "SSSSSSCCQ"[rng.Index(9)];

    const double a = std::isnan(age) ? 30.0 : age;
    double score = 2.6 * (p.female ? 1.0 : 0.0) - 1.5 * (p.pclass - 1) - 0.05 * (a - 30.0);
    score -= 0.8 * std::max(0, p.sibsp - 1);
    const double u = std::clamp(rng.Uniform(), 1e-12, 1.0 - 1e-12);
    p.score = score + std::log(u / (1.0 - u));
    if (!missing_age[i]) p.age = age;
  }

  std::vector<int> rank(kRows);
  std::iota(rank.begin(), rank.end(), 0);
  std::stable_sort(rank.begin(), rank.end(), [&](int x, int y) { return people[x].score > people[y].score; });
  std::vector<bool> survived(kRows, false);
  for (int i = 0; i < kSurvivors; ++i) survived[rank[i]] = true;

  std::ofstream out(argv[1], std::ios::binary | std::ios::trunc);
  if (!out) {
    std::fprintf(stderr, "cannot write %s\n", argv[1]);
    return 1;
  }
  out << "PassengerId,Survived,Pclass,Name,Sex,Age,SibSp,Parch,Ticket,Fare,Cabin,Embarked\n";
  for (int i = 0; i < kRows; ++i) {
    const Passenger& p = people[i];
    const std::string name = std::string(kLast[rng.Index(12)]) + ", " + (p.female ? "Mrs. " : "Mr. ") +
                             kFirst[rng.Index(12)];
    const std::string cabin =
        p.pclass == 1 && rng.Uniform() < 0.8 ? std::string(1, "ABCDE"[rng.Index(5)]) + std::to_string(rng.Index(120) + 1)
                                             : "";
    out << (i + 1) << ',' << (survived[i] ? 1 : 0) << ',' << p.pclass << ',' << tabsense::CsvField(name) << ','
        << (p.female ? "female" : "male") << ',' << (std::isnan(p.age) ? "" : tabsense::FormatDouble(p.age)) << ','
        << p.sibsp << ',' << p.parch << ',' << (100000 + rng.Index(300000)) << ','
        << tabsense::FormatDouble(p.fare) << ',' << cabin << ',' << p.embarked << '\n';
  }
  return 0;
}
