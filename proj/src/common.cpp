#include "lodgp/common.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <mutex>
#include <thread>

namespace lodgp
{

namespace
{
std::atomic<int> g_threads{1};
}

void set_num_threads(int n)
{
   g_threads = std::max(1, n);
}

int num_threads()
{
   return g_threads;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)> &body)
{
   const std::size_t workers = std::min<std::size_t>(g_threads, n);
   if (workers <= 1)
   {
      for (std::size_t i = 0; i < n; ++i) { body(i); }
      return;
   }
   std::exception_ptr failure;
   std::mutex failure_lock;
   std::vector<std::thread> pool;
   pool.reserve(workers);
   for (std::size_t w = 0; w < workers; ++w)
   {
      const std::size_t begin = n * w / workers;
      const std::size_t end = n * (w + 1) / workers;
      pool.emplace_back([&, begin, end]()
      {
         try
         {
            for (std::size_t i = begin; i < end; ++i) { body(i); }
         }
         catch (...)
         {
            std::lock_guard<std::mutex> guard(failure_lock);
            if (!failure) { failure = std::current_exception(); }
         }
      });
   }
   for (auto &t : pool) { t.join(); }
   if (failure) { std::rethrow_exception(failure); }
}

double wall_time()
{
   using clock = std::chrono::steady_clock;
   return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

void require_length(std::size_t got, std::size_t expected, const char *what)
{
   if (got != expected)
   {
      throw LengthMismatchError(std::string(what) + ": expected length " +
                                std::to_string(expected) + ", got " +
                                std::to_string(got));
   }
}

} // namespace lodgp
