#pragma once

#include <iostream>

#include "gmc/errors.hpp"
#include "gmc/experiments.hpp"

namespace gmc::cli {

enum Exit { kPass = 0, kVerdictFail = 1, kValidation = 2, kNumeric = 3 };

/// Runs body and maps library exceptions to process exit codes, writing
/// the message to err.
template <class F>
int guarded(F&& body, std::ostream& err = std::cerr) {
  try {
    return body();
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const ValidationError& e) {
    err << "invalid config: " << e.what() << "\n";
    return kValidation;
  } catch (const ReplayError& e) {
    err << "replay refused: " << e.what() << "\n";
    return kValidation;
  } catch (const ArgumentError& e) {
    err << "argument error: " << e.what() << "\n";
    return kValidation;
  } catch (const DomainError& e) {
    err << "domain error: " << e.what() << "\n";
    return kValidation;
  } catch (const ResolutionError& e) {
    err << "resolution error: " << e.what() << "\n";
    return kValidation;
  } catch (const PhaseError& e) {
    err << "phase error: " << e.what() << "\n";
    return kValidation;
  } catch (const ConsistencyError& e) {
    err << "consistency error: " << e.what() << "\n";
    return kValidation;
  }
}

}  // namespace gmc::cli
