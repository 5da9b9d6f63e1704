#ifndef WQED_SCENARIO_HPP
#define WQED_SCENARIO_HPP

#include <optional>
#include <string>

#include <json.hpp>

#include "wqed/detection.hpp"
#include "wqed/dynamics.hpp"
#include "wqed/emission.hpp"
#include "wqed/moments.hpp"
#include "wqed/spectroscopy.hpp"
#include "wqed/tomography.hpp"

namespace wqed {

enum class Scenario { Noon3L4, PartitionL2, GainCalibration, SpectroscopyFit, DynamicsCheck };

std::string scenario_name(Scenario s);
Scenario scenario_from_name(const std::string& name);

struct ImperfectionModel {
    enum class Kind { None, VacuumAdmixture, PerQubitDecay };
    Kind kind = Kind::None;
    double p = 0;
};

struct ScenarioConfig {
    Scenario scenario = Scenario::Noon3L4;
    EmitterConfig device;
    AmplifierChainParams chain;
    size_t n_shots = 1'000'000;
    uint64_t seed = 1;
    ImperfectionModel imperfection;
    double ground_thermal_n_th = 0.006;  // residual thermal photons in ground runs
    std::string output_dir = "wqed-out";

    // Device geometry and measurement-chain defaults for each scenario;
    // the two canonical spacings differ only in geometry and frequency.
    static ScenarioConfig defaults_for(Scenario s);
    static ScenarioConfig from_json(const nlohmann::json& j);
    static ScenarioConfig from_json_file(const std::string& path);
    nlohmann::json to_json() const;
    std::string config_hash() const;
};

struct RunReport {
    nlohmann::json data;

    void save(const std::string& path) const;
    static RunReport load(const std::string& path);
};

// Executes the configured end-to-end experiment and writes all artifacts
// (record files, moment tables, reconstructed state, report.json) into
// config.output_dir. The pipeline is identical for both canonical states.
RunReport run_scenario(const ScenarioConfig& config);

// Re-emits plotting CSVs (moment bars, density-matrix grids, time traces)
// from a completed run directory.
void emit_plot_data(const std::string& run_dir);

nlohmann::json density_matrix_to_json(const DensityMatrix& rho);
DensityMatrix density_matrix_from_json(const nlohmann::json& j);

}  // namespace wqed

#endif
