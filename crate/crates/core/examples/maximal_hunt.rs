use alphacf::exactnum::ratio;
use alphacf::tree::is_maximal;

fn main() {
    for qmax in [50u64, 200, 1000] {
        println!("is_maximal(4/9, {qmax}) = {}", is_maximal(&ratio(4, 9), qmax));
    }
    println!("is_maximal(3/5, 50) = {}", is_maximal(&ratio(3, 5), 50));
    println!("is_maximal(3/7, 50) = {}", is_maximal(&ratio(3, 7), 50));
    println!("is_maximal(7/16, 50) = {}", is_maximal(&ratio(7, 16), 50));
}
