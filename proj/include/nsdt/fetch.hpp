#pragma once

#include <string>
#include <vector>

namespace nsdt {

struct FetchResult {
  bool ok = false;
  std::vector<std::string> files;
  std::string message;
};

// Best-effort download of a dataset's published files into
// data_dir/<dataset_id>/. The credit and insurance competitions sit behind
// authenticated hosts, so those report manual instructions instead. Offline
// environments get a clear failure message; generate a synthetic stand-in or
// place the files manually in that case.
FetchResult fetch_dataset(const std::string& dataset_id, const std::string& data_dir);

// zlib-based gunzip used for the census .gz payloads
std::string gunzip_bytes(const std::string& compressed);

}  // namespace nsdt
