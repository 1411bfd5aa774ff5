#pragma once

// Command-line front end. Every subcommand reads a Config (file plus --set
// overrides), writes its artifacts and the effective config to output.dir,
// and reports failures as a JSON record on stderr.

#include "fspike/config.hpp"
#include "fspike/data_io.hpp"
#include "fspike/train.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace fspike {

NeuronParams neuron_from_config(const Config& cfg);
// Loads network.checkpoint when set, otherwise a fresh network.
NetworkSpec network_from_config(const Config& cfg);
TrainConfig train_config_from(const Config& cfg);
// `split` is "train" or "test"; returns an empty dataset when its paths are unset.
Dataset dataset_from_config(const Config& cfg, const std::string& split);

// Returns the process exit code: 0 success, 1 usage, 2 numerical, 3 I/O.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

} // namespace fspike
