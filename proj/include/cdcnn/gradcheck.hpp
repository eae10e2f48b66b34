#ifndef CDCNN_GRADCHECK_HPP
#define CDCNN_GRADCHECK_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace cdcnn::gradcheck {

struct CaseResult {
    std::string name;
    double max_rel_error = 0.0;
    std::size_t checks = 0;  // scalar gradient components compared
};

struct Report {
    std::vector<CaseResult> cases;
    double worst = 0.0;
    std::string worst_case;
    std::size_t total_checks = 0;

    bool passed(double tolerance) const { return worst < tolerance; }
};

/// Compares analytic gradients against central finite differences for every
/// layer primitive (including input gradients) and for the three assembled
/// networks, across `trials` random configurations each.
Report run(std::size_t trials, std::uint64_t seed);

}  // namespace cdcnn::gradcheck

#endif
