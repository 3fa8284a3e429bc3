#pragma once

#include <string>

#include "amrins/benchmarks.hpp"

namespace amrins {

/// One legacy-VTK structured-points file per box under dir/fields, plus a
/// manifest CSV with columns: level, box id, lo, hi, h, time.
void writeFieldSnapshot(const std::string& dir, const CompositeData& w,
                        const CompositeData* p, double time, int index);

void writeConvergenceCsv(const std::string& path, const ConvergenceReport& r);
void writeSpeedupCsv(const std::string& path, const SpeedupReport& r);
void writeDivergenceCsv(const std::string& path,
                        const std::vector<StepRecord>& recs);
void writeRunCsv(const std::string& path, const std::vector<StepRecord>& recs);

}  // namespace amrins
