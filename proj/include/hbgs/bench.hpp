#pragma once

#include "hbgs/battery.hpp"
#include "hbgs/block.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hbgs::bench {

/// Systems the harness can solve; the first seven mirror the rows of the
/// subblock iteration table.
enum class System
{
    species,          // GMRES + RAS DD(0)-ILU(0) on A_xx
    pressure,         // GMRES + SA-AMG on A_pp
    liquid_voltage,   // GMRES + SA-AMG on A_phil
    solid_voltage,    // GMRES + SA-AMG on A_phis
    coupled_voltages, // FGMRES + voltage BGS on the voltage group
    nonvoltage,       // FGMRES + non-voltage BGS on the non-voltage group
    end_to_end,       // outer FGMRES + hierarchical preconditioner
    monolithic_ras,   // GMRES + RAS on the monolithic matrix
    direct,           // dense LU on the monolithic matrix
};

std::string_view system_name( System s );
/// Throws ConfigError on an unknown name.
System system_from_name( std::string_view name );
std::span< const System > table_systems();

struct SolverSettings
{
    std::size_t       restart              = 30;
    double            tolerance            = 1e-6;
    std::size_t       max_iterations       = 1000;
    std::size_t       outer_restart        = 5;
    double            outer_tolerance      = 1e-6;
    std::size_t       outer_max_iterations = 100;
    std::size_t       overlap              = 0;
    ElectrochemConfig precon               = ElectrochemConfig::defaults();
};

/// One timed execution.
struct Run
{
    double      setup_seconds = 0.0;
    double      solve_seconds = 0.0;
    std::size_t iterations    = 0;
    bool        converged     = false;
    double      relative_residual = 0.0;
    std::size_t inner_failures    = 0;
    std::string error;
};

/// Solve `system` of the case once. Right-hand sides are the manufactured
/// images (block times the matching solution segment). `workers` is the
/// subdomain count for the Schwarz-based systems and is ignored otherwise.
/// Failures are returned in `Run::error`, never thrown (configuration errors
/// excepted).
Run run_system( const battery::BatteryCase& bc, System system, const SolverSettings& settings, std::size_t workers );

struct ExperimentRecord
{
    std::string case_id;
    std::size_t refinement  = 0;
    std::size_t dofs        = 0;
    std::string system;
    std::string solver;
    std::size_t workers     = 1;
    std::size_t repetitions = 1;
    double      setup_mean      = 0.0;
    double      setup_stddev    = 0.0;
    double      solve_mean      = 0.0;
    double      solve_stddev    = 0.0;
    double      iterations_mean   = 0.0;
    double      iterations_stddev = 0.0;
    std::size_t iterations        = 0; // last measured run
    bool        converged         = false;
    double      relative_residual = 0.0;
    std::size_t inner_failures    = 0;
    std::string error;

    bool operator==( const ExperimentRecord& ) const = default;
};

struct Summary
{
    double mean   = 0.0;
    double stddev = 0.0; // population
};

Summary summarize( std::span< const double > samples );

/// Folds k + 1 runs into a record, discarding the first as warmup. Throws
/// ConfigError with fewer than two runs.
ExperimentRecord aggregate_runs( ExperimentRecord meta, std::span< const Run > runs );

std::string solver_label( System system, const SolverSettings& settings );

// ---------------------------------------------------------------------------
// Scaling models

enum class Model
{
    weak,
    strong,
};

struct ScalingPoint
{
    double x; // problem size n (weak) or worker count P (strong)
    double t; // time
};

struct EfficiencyFit
{
    Model       model    = Model::weak;
    double      eta      = 1.0;
    double      residual = 0.0; // RMS of log-residuals
    std::size_t points   = 0;
    /// Strong fits: efficiency between consecutive points and the first P at
    /// which it drops below the 0.5 cut-off.
    std::vector< double >   pairwise;
    std::optional< double > cutoff;
    std::string             label;
};

/// T_n = T_m / eta^{log2(n/m)}: least squares of ln T on log2 n, eta = exp(-slope).
EfficiencyFit fit_weak_efficiency( std::span< const ScalingPoint > points );

/// T_n = (1/eta) (P_m / P_n) T_m with the first point as baseline; ln eta is
/// the mean of ln(P_m T_m / (P_n T_n)) over the later points.
EfficiencyFit fit_strong_efficiency( std::span< const ScalingPoint > points );

/// (1 - T_n/T_m) / (1 - P_m/P_n): 1 for ideal speed-up, 0.5 when doubling P
/// saves 25%.
double pairwise_strong_efficiency( ScalingPoint m, ScalingPoint n );

/// Strong fits per (case, system) over worker counts (Schwarz-based systems
/// only, where the worker count changes the preconditioner) and weak fits per
/// system over records with a common dofs/worker ratio, using solve_mean.
std::vector< EfficiencyFit > fit_records( std::span< const ExperimentRecord > records );

// ---------------------------------------------------------------------------
// Configuration and suite

struct CaseSpec
{
    std::string          id;
    battery::CaseConfig config;
};

struct SuiteConfig
{
    std::vector< CaseSpec > cases;
    std::vector< System >   systems;
    std::vector< std::size_t > workers{ 4 };
    std::size_t                repetitions = 5;
    SolverSettings             solver;
};

/// Strict readers: unknown keys and bad values raise ConfigError.
battery::CaseConfig case_config_from_json( std::string_view text );
SuiteConfig         suite_config_from_json( std::string_view text );
SuiteConfig         load_suite_config( const std::filesystem::path& path );
std::string         read_text( const std::filesystem::path& path );

/// Records in config order (case, system, worker count).
std::vector< ExperimentRecord > run_suite( const SuiteConfig& config );

// ---------------------------------------------------------------------------
// Reports

enum class Format
{
    csv,
    json,
    markdown,
};

/// Throws ConfigError on an unknown name; accepts csv, json, md, markdown.
Format format_from_name( std::string_view name );

/// Throws ConfigError when `records` is empty.
std::string emit_report( std::span< const ExperimentRecord > records, std::span< const EfficiencyFit > fits, Format format );

std::string records_to_csv( std::span< const ExperimentRecord > records );
std::string records_to_json( std::span< const ExperimentRecord > records );
std::vector< ExperimentRecord > records_from_json( std::string_view text );
/// Subblock rows by case columns, cells hold iteration counts.
std::string iteration_table( std::span< const ExperimentRecord > records );
std::string fits_to_json( std::span< const EfficiencyFit > fits );
std::string fits_to_markdown( std::span< const EfficiencyFit > fits );

} // namespace hbgs::bench
