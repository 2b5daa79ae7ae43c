#pragma once

// JSON fragments of run reports, in report units (um, deg, dB).

#include <json.hpp>

#include "ionaddr/designer.h"

namespace ionaddr::app::report {

nlohmann::json header(const std::string& command);
nlohmann::json crystal(const crystal::IonCrystal& crystal);
nlohmann::json pitch_plan(const std::vector<double>& positions, double magnification);
nlohmann::json mirror(const pic::TirMirrorSpec& spec);
nlohmann::json prescription(const design::LensStackPrescription& rx);
nlohmann::json channel(const design::ChannelReport& r, bool with_profile);
nlohmann::json crosstalk(const design::CrosstalkReport& r);
nlohmann::json sweep(const design::SweepReport& r);
std::string sweep_csv(const design::SweepReport& r);

}  // namespace ionaddr::app::report
