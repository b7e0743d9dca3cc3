#pragma once

#include <string>

#include "chartagent/evidence.hpp"
#include "chartagent/orchestrator.hpp"

namespace chartagent::toollib {

// Registers the eleven library tools (classification, detection, OCR,
// calibration, curve extraction, sector segmentation, legend matching,
// value reading, annotation reading, calculation, table structuring) with
// their cost/gain metadata. Costs are in abstract cost units; declared
// gains are calibrated so cheap look-ups rank above expensive re-measures
// once their novelty has decayed.
void register_library_tools(orchestrator::ToolRegistry& registry);

orchestrator::ToolRegistry standard_registry();

// One-call convenience: parse the question, seed the belief, and run the
// standard registry under the default planner.
orchestrator::EpisodeResult answer_question(
    const ChartImage& image, const std::string& question_text,
    const scheduler::SchedulerConfig& config = {},
    const orchestrator::EpisodeOptions& options = {});

// Replay adapter: re-runs a recorded episode from its own question, config,
// and seed under the default planner, so the verifier can diff the two
// evidence streams. The registry and OCR backend must match the recording
// environment.
class LibraryReplayRunner : public evidence::ReplayRunner {
  public:
    LibraryReplayRunner(const orchestrator::ToolRegistry& registry,
                        orchestrator::EpisodeOptions options);

    bool has_tool(const std::string& name) const override;
    evidence::EvidencePackage rerun(const evidence::EvidencePackage& recorded,
                                    const ChartImage& image) const override;

  private:
    const orchestrator::ToolRegistry* registry_;
    orchestrator::EpisodeOptions options_;
};

}  // namespace chartagent::toollib
