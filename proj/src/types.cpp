#include "helmray/types.hpp"

#include <sstream>

namespace helmray {

std::size_t WaveFront::alive_count() const {
  std::size_t n = 0;
  for (const auto& r : rays) n += r.alive ? 1 : 0;
  return n;
}

double WaveFront::total_power() const {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < tube_flux.size(); ++i) sum += tube_flux(i);
  return sum;
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::reached_target: return "reached_target";
    case Termination::caustic: return "caustic";
    case Termination::error: return "error";
  }
  return "unknown";
}

namespace {
std::string caustic_message(long ray, double tau) {
  std::ostringstream os;
  os << "caustic: rays " << ray << " and " << ray + 1 << " crossed at tau = " << tau;
  return os.str();
}
}  // namespace

CausticEncountered::CausticEncountered(long ray, double tau)
    : NumericalError(caustic_message(ray, tau), ray), tau_(tau) {}

}  // namespace helmray
