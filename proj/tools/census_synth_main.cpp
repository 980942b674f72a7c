#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "groupcf/errors.hpp"
#include "groupcf/synth.hpp"

// Writes the bundled synthetic census sample plus its schema, so the demo
// pipeline has reproducible input files.
int main(int argc, char** argv) {
    CLI::App app{"generate the synthetic census demo dataset"};
    std::size_t rows = 10000;
    std::uint64_t seed = 0;
    std::string out_data = "census.csv";
    std::string out_schema = "census_schema.json";
    app.add_option("--rows", rows, "row count");
    app.add_option("--seed", seed, "random seed")->envname("GROUPCF_SEED");
    app.add_option("--out-data", out_data, "CSV output path");
    app.add_option("--out-schema", out_schema, "schema JSON output path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        const auto data = groupcf::synth_census(rows, seed);
        groupcf::write_dataset_csv(data, out_data);
        std::ofstream schema_out(out_schema, std::ios::binary);
        if (!schema_out) throw groupcf::IoError("cannot open schema output: " + out_schema);
        schema_out << data.schema.to_json_text();
        std::size_t positives = 0;
        for (const int label : data.labels) positives += label;
        std::printf("wrote %zu rows (%zu positive) to %s, schema to %s\n", data.size(),
                    positives, out_data.c_str(), out_schema.c_str());
        return 0;
    } catch (const groupcf::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
