#include "scopeq/procedure.h"

#include "scopeq/error.h"

namespace scopeq {

void validate(const ProcedureAnnotation& annotation) {
  const auto& id = annotation.procedure_id;
  if (annotation.withdrawal_start_ms >= annotation.withdrawal_end_ms) {
    throw SchemaError("procedure " + id + ": withdrawal start must precede withdrawal end");
  }
  for (const auto* list : {&annotation.polyp_events, &annotation.exclusion_intervals}) {
    for (const auto& iv : *list) {
      if (iv.start_ms > iv.end_ms) {
        throw SchemaError("procedure " + id + ": interval [" + std::to_string(iv.start_ms) + ", " +
                          std::to_string(iv.end_ms) + ") is inverted");
      }
    }
  }
}

}  // namespace scopeq
